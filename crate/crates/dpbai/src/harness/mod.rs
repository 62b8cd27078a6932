//! Simulation harness: configuration, single runs, batches and sweeps.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod episode;
pub mod experiment;

pub use config::{ConfigError, ExperimentConfig, InstanceSpec, PRESETS};
pub use episode::{
    run_episode, run_episode_observed, run_seed, substream, BernoulliEnv, RunRecord, StepView, ENV_STREAM,
    NOISE_STREAM, POLICY_STREAM,
};
pub use experiment::{
    mean_std, monte_carlo, run_validation, summarize, sweep_epsilon, with_workers, write_batches, write_validation,
    Batch, RunRow, Summary, ValidationRow, WORKERS_ENV,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] crate::DomainError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("no validation case matches '{0}'")]
    UnknownLemma(String),
}
