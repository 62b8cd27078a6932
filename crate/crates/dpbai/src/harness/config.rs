//! Experiment configuration in a flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! instance = mu2            # preset name or comma-separated means
//! eps = 1
//! eps_grid = 0.01, 0.1, 1, 10, 100
//! policy = dp-tt
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::divergences::PrivacyParams;
use crate::oracle::BanditInstance;
use crate::policies::PolicyKind;
use crate::stopping::{ThresholdMode, DEFAULT_PULL_CAP};

/// Instances used in the experiments.
pub const PRESETS: [(&str, [f64; 5]); 6] = [
    ("mu1", [0.95, 0.9, 0.9, 0.9, 0.5]),
    ("mu2", [0.75, 0.7, 0.7, 0.7, 0.7]),
    ("mu3", [0.1, 0.3, 0.5, 0.7, 0.9]),
    ("mu4", [0.75, 0.625, 0.5, 0.375, 0.25]),
    ("mu5", [0.75, 0.53125, 0.375, 0.28125, 0.25]),
    ("mu6", [0.75, 0.71875, 0.625, 0.46875, 0.25]),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid value for '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Means of a preset, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<Vec<f64>> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, m)| m.to_vec())
}

/// A preset name or a comma-separated list of means.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub label: String,
    pub means: Vec<f64>,
}

impl InstanceSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if let Some(means) = preset(text) {
            return Ok(Self { label: text.to_string(), means });
        }
        let means = parse_list(text)?;
        BanditInstance::new(means.clone()).map_err(|e| e.to_string())?;
        Ok(Self { label: text.to_string(), means })
    }

    pub fn instance(&self) -> BanditInstance {
        BanditInstance::new(self.means.clone()).expect("validated on construction")
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", t.trim()))).collect()
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub beta: f64,
    pub policy: PolicyKind,
    pub eps_grid: Vec<f64>,
    pub runs: u64,
    pub seed: u64,
    pub threshold_mode: ThresholdMode,
    pub pull_cap: u64,
    pub s: f64,
    pub output: PathBuf,
    /// `false` runs the estimator without Laplace noise.
    pub noise: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: InstanceSpec::parse("mu2").expect("preset"),
            eps: 1.0,
            delta: 0.1,
            eta: 1.0,
            beta: 0.5,
            policy: PolicyKind::DpTt,
            eps_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            runs: 200,
            seed: 0,
            threshold_mode: ThresholdMode::Exact,
            pull_cap: DEFAULT_PULL_CAP,
            s: 2.0,
            output: PathBuf::from("results"),
            noise: true,
        }
    }
}

impl ExperimentConfig {
    /// The larger runs and stricter risk used for the published figures.
    pub fn paper_scale() -> Self {
        Self { delta: 0.01, runs: 1000, ..Self::default() }
    }

    pub fn params(&self) -> PrivacyParams {
        PrivacyParams { eps: self.eps, delta: self.delta, eta: self.eta, beta: self.beta }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Parses a whole file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key = value, found '{line}'"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| ConfigError::Value { key: key.to_string(), msg };
        let num = |v: &str| v.parse::<f64>().map_err(|e| bad(format!("'{v}': {e}")));
        let int = |v: &str| v.parse::<u64>().map_err(|e| bad(format!("'{v}': {e}")));
        match key {
            "instance" => self.instance = InstanceSpec::parse(value).map_err(bad)?,
            "eps" => self.eps = num(value)?,
            "delta" => self.delta = num(value)?,
            "eta" => self.eta = num(value)?,
            "beta" => self.beta = num(value)?,
            "policy" => self.policy = value.parse().map_err(bad)?,
            "eps_grid" => self.eps_grid = parse_list(value).map_err(bad)?,
            "runs" => self.runs = int(value)?,
            "seed" => self.seed = int(value)?,
            "threshold_mode" => self.threshold_mode = value.parse().map_err(bad)?,
            "pull_cap" => self.pull_cap = int(value)?,
            "s" => self.s = num(value)?,
            "output" => self.output = PathBuf::from(value),
            "noise" => {
                self.noise = match value {
                    "true" | "on" | "1" => true,
                    "false" | "off" | "0" => false,
                    other => return Err(bad(format!("'{other}' is not a boolean"))),
                }
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Checks ranges that the parser alone cannot enforce.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: String| Err(ConfigError::Value { key: key.to_string(), msg });
        PrivacyParams::new(self.eps, self.delta, self.eta, self.beta)
            .map_err(|e| ConfigError::Value { key: "eps/delta/eta/beta".into(), msg: e.to_string() })?;
        if self.eps_grid.is_empty() || self.eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad("eps_grid", "needs at least one positive value".into());
        }
        if self.runs == 0 {
            return bad("runs", "must be at least 1".into());
        }
        if self.s <= 1.0 {
            return bad("s", format!("{} must exceed 1", self.s));
        }
        if self.pull_cap < self.instance.means.len() as u64 {
            return bad("pull_cap", "must cover the initial pull of every arm".into());
        }
        Ok(())
    }
}
