//! Monte Carlo batches, ε-sweeps and their CSV output.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::{validation_manifest, TailReport, ValidationCase};
use crate::harness::config::ExperimentConfig;
use crate::harness::episode::{run_episode, run_seed, RunRecord};
use crate::harness::HarnessError;
use crate::oracle::{beta_characteristic_time, characteristic_time, regime_boundary};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "DPBAI_WORKERS";

/// Runs `f` on a pool sized by [`WORKERS_ENV`], or rayon's default.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let n = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub run_id: u64,
    pub policy: String,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub beta: f64,
    pub seed: u64,
    pub stopping_time: u64,
    pub recommendation: usize,
    pub correct: bool,
    pub timed_out: bool,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub policy: String,
    pub instance: String,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub beta: f64,
    pub runs: u64,
    pub mean: f64,
    /// Per-run standard deviation.
    pub std: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    /// Fraction of runs that stopped with a wrong answer.
    pub error_rate: f64,
    pub timeouts: u64,
    pub oracle_t: f64,
    pub oracle_t_beta: f64,
    /// `T*_ε · ln(1/δ)`.
    pub oracle_curve: f64,
    pub regime_eps: f64,
}

const SUMMARY_HEADER: [&str; 16] = [
    "policy",
    "instance",
    "eps",
    "delta",
    "eta",
    "beta",
    "runs",
    "mean",
    "std",
    "std_err",
    "error_rate",
    "timeouts",
    "oracle_T",
    "oracle_T_beta",
    "oracle_curve",
    "regime_eps",
];

/// Records of one batch with their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

impl Batch {
    pub fn rows(&self, cfg: &ExperimentConfig) -> Vec<RunRow> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| RunRow {
                run_id: i as u64,
                policy: cfg.policy.name().to_string(),
                eps: cfg.eps,
                delta: cfg.delta,
                eta: cfg.eta,
                beta: cfg.beta,
                seed: r.seed,
                stopping_time: r.stopping_time,
                recommendation: r.recommendation,
                correct: r.correct,
                timed_out: r.timed_out,
            })
            .collect()
    }
}

/// Mean, per-run standard deviation and standard error.
pub fn mean_std(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt(), (var / n).sqrt())
}

/// Aggregates finished runs under `cfg`.
pub fn summarize(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<Summary, HarnessError> {
    let instance = cfg.instance.instance();
    let times: Vec<f64> = records.iter().map(|r| r.stopping_time as f64).collect();
    let (mean, std, std_err) = mean_std(&times);
    let wrong = records.iter().filter(|r| !r.timed_out && !r.correct).count();
    let t = characteristic_time(cfg.eps, &instance)?.t_star;
    let t_beta = beta_characteristic_time(cfg.eps, &instance, cfg.beta)?.t_star;
    Ok(Summary {
        policy: cfg.policy.name().to_string(),
        instance: cfg.instance.label.clone(),
        eps: cfg.eps,
        delta: cfg.delta,
        eta: cfg.eta,
        beta: cfg.beta,
        runs: records.len() as u64,
        mean,
        std,
        std_err,
        error_rate: wrong as f64 / records.len() as f64,
        timeouts: records.iter().filter(|r| r.timed_out).count() as u64,
        oracle_t: t,
        oracle_t_beta: t_beta,
        oracle_curve: t * (1.0 / cfg.delta).ln(),
        regime_eps: regime_boundary(&instance).max_boundary,
    })
}

/// Runs `cfg.runs` episodes in parallel on derived seeds.
pub fn monte_carlo(cfg: &ExperimentConfig) -> Result<Batch, HarnessError> {
    cfg.validate()?;
    let records = with_workers(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|i| run_episode(cfg, run_seed(cfg.seed, i)))
            .collect::<crate::Result<Vec<_>>>()
    })?;
    let summary = summarize(cfg, &records)?;
    Ok(Batch { records, summary })
}

/// One batch per ε of the grid, all other settings fixed.
pub fn sweep_epsilon(cfg: &ExperimentConfig) -> Result<Vec<Batch>, HarnessError> {
    cfg.eps_grid.iter().map(|&eps| monte_carlo(&ExperimentConfig { eps, ..cfg.clone() })).collect()
}

fn create(path: &Path) -> Result<File, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    File::create(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Csv { path: path.to_path_buf(), source: e }
}

/// Writes `runs.csv` and `summary.csv` for the batches under `dir`.
pub fn write_batches(
    dir: &Path,
    cfg: &ExperimentConfig,
    batches: &[Batch],
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let runs_path = dir.join("runs.csv");
    let mut w = csv::Writer::from_writer(create(&runs_path)?);
    let mut offset = 0;
    for b in batches {
        let bcfg = ExperimentConfig { eps: b.summary.eps, ..cfg.clone() };
        for mut row in b.rows(&bcfg) {
            row.run_id += offset;
            w.serialize(row).map_err(csv_err(&runs_path))?;
        }
        offset += b.records.len() as u64;
    }
    w.flush().map_err(|source| HarnessError::Io { path: runs_path.clone(), source })?;

    let summary_path = dir.join("summary.csv");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(&summary_path)?);
    w.write_record(SUMMARY_HEADER).map_err(csv_err(&summary_path))?;
    for b in batches {
        w.serialize(&b.summary).map_err(csv_err(&summary_path))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: summary_path.clone(), source })?;
    Ok((runs_path, summary_path))
}

/// One row of `validate.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub manifest: &'static str,
    pub lemma_id: String,
    pub params: String,
    pub trials: u64,
    pub violations: u64,
    pub frequency: f64,
    pub bound: f64,
    pub allowed: f64,
    pub bound_margin: f64,
    pub passed: bool,
}

impl ValidationRow {
    fn new(case: &ValidationCase, r: &TailReport) -> Self {
        Self {
            manifest: crate::concentration::MANIFEST_VERSION,
            lemma_id: r.lemma_id.clone(),
            params: case.describe(),
            trials: r.trials,
            violations: r.violations,
            frequency: r.frequency(),
            bound: r.bound,
            allowed: r.allowed,
            bound_margin: r.bound_margin,
            passed: r.passed(),
        }
    }
}

/// Runs the manifest cases whose lemma id or family matches `filter`.
pub fn run_validation(filter: Option<&str>, seed: u64) -> Result<Vec<ValidationRow>, HarnessError> {
    let cases: Vec<ValidationCase> = validation_manifest()
        .into_iter()
        .filter(|c| match filter {
            None => true,
            Some(f) => f == c.family() || f.starts_with(&format!("{}-", c.family())),
        })
        .collect();
    if cases.is_empty() {
        return Err(HarnessError::UnknownLemma(filter.unwrap_or_default().to_string()));
    }
    let mut rows = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let reports = with_workers(|| case.run(seed.wrapping_add(i as u64 * 0x9e37_79b9)))?;
        rows.extend(
            reports
                .iter()
                .filter(|r| filter.map_or(true, |f| f == case.family() || f == r.lemma_id))
                .map(|r| ValidationRow::new(case, r)),
        );
    }
    Ok(rows)
}

/// Writes `validate.csv` under `dir`.
pub fn write_validation(dir: &Path, rows: &[ValidationRow]) -> Result<PathBuf, HarnessError> {
    let path = dir.join("validate.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for r in rows {
        w.serialize(r).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    Ok(path)
}
