//! Command-line front end of the simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpbai::harness::{
    monte_carlo, run_validation, sweep_epsilon, write_batches, write_validation, ExperimentConfig, HarnessError,
    InstanceSpec,
};
use dpbai::oracle::{beta_characteristic_time, characteristic_time, lower_bound_time, regime_boundary};

#[derive(Parser)]
#[command(name = "dpbai", version, about = "Best-arm identification under global differential privacy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic time, optimal allocation and regime boundary.
    Oracle {
        /// Preset name (mu1..mu6) or comma-separated means.
        #[arg(long)]
        instance: String,
        #[arg(long)]
        eps: f64,
        /// Also solve the problem with the leader's share fixed to beta.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Monte Carlo batch at a single ε.
    Run(RunArgs),
    /// One batch per ε of the configured grid.
    Sweep(RunArgs),
    /// Concentration checks from the built-in manifest.
    Validate {
        /// Lemma id (e.g. laplace-upper) or family (laplace, convolution, grid).
        #[arg(long)]
        lemma: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Io(String),
    Validation(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io { .. } | HarnessError::Csv { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::from_file(&self.config).map_err(|e| match e {
            dpbai::harness::ConfigError::Read { .. } => Failure::Io(e.to_string()),
            e => Failure::Config(e.to_string()),
        })?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
        Ok(cfg)
    }
}

fn oracle(instance: &str, eps: f64, beta: Option<f64>) -> Result<(), Failure> {
    let spec = InstanceSpec::parse(instance).map_err(Failure::Config)?;
    let inst = spec.instance();
    let sol = characteristic_time(eps, &inst).map_err(|e| Failure::Config(e.to_string()))?;
    let lb = lower_bound_time(eps, &inst).map_err(|e| Failure::Config(e.to_string()))?;
    let rb = regime_boundary(&inst);
    println!("instance      {spec}");
    println!("eps           {eps}");
    println!("T*            {:.6}", sol.t_star);
    println!("w*            {}", fmt_vec(&sol.w_star));
    println!("lower bound   {lb:.6}");
    println!("boundary      {:.4}", rb.max_boundary);
    println!("vs best arm   {}", fmt_vec(&rb.versus_best));
    if sol.is_near_degenerate() {
        println!("note          w* puts almost no weight on some arm; the solution is near-degenerate");
    }
    if let Some(beta) = beta {
        let sb = beta_characteristic_time(eps, &inst, beta).map_err(|e| Failure::Config(e.to_string()))?;
        println!("T*_beta       {:.6}  (beta = {beta})", sb.t_star);
        println!("w*_beta       {}", fmt_vec(&sb.w_star));
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(args: &RunArgs, sweep: bool) -> Result<(), Failure> {
    let cfg = args.load()?;
    let batches = if sweep { sweep_epsilon(&cfg)? } else { vec![monte_carlo(&cfg)?] };
    let (runs, summary) = write_batches(&cfg.output, &cfg, &batches)?;
    for b in &batches {
        let s = &b.summary;
        println!(
            "{} eps={} runs={} mean={:.1} std={:.1} error_rate={:.4} timeouts={} oracle_curve={:.1}",
            s.policy, s.eps, s.runs, s.mean, s.std, s.error_rate, s.timeouts, s.oracle_curve
        );
    }
    if sweep {
        println!("regime boundary eps = {:.4}", batches[0].summary.regime_eps);
    }
    println!("wrote {} and {}", runs.display(), summary.display());
    Ok(())
}

fn validate(lemma: Option<&str>, seed: u64, out: Option<&PathBuf>) -> Result<(), Failure> {
    let rows = run_validation(lemma, seed)?;
    for r in &rows {
        println!(
            "{:<8} {:<18} freq={:.3e} bound={:.3e} allowed={:.3e}  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.lemma_id,
            r.frequency,
            r.bound,
            r.allowed,
            r.params
        );
    }
    if let Some(dir) = out {
        let path = write_validation(dir, &rows)?;
        println!("wrote {}", path.display());
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Validation(format!("{failed} of {} checks failed", rows.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Oracle { instance, eps, beta } => oracle(instance, *eps, *beta),
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Validate { lemma, seed, out } => validate(lemma.as_deref(), *seed, out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
