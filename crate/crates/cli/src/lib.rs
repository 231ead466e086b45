//! Configuration, orchestration and reporting for `anderson-lab` runs.

pub mod config;
pub mod output;
pub mod run;

use anderson_core::ErrorCategory;

pub use config::{parse_config, parse_config_with, ConfigError, Experiment, ExperimentConfig, ExperimentKind, Overrides};
pub use run::{execute, Artifacts};

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] anderson_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Model(e) => match e.category() {
                ErrorCategory::Input => EXIT_CONFIG,
                ErrorCategory::Capacity => EXIT_CAPACITY,
                ErrorCategory::Numeric => EXIT_NUMERIC,
            },
            RunError::Io(_) => EXIT_IO,
        }
    }
}

/// Runs the experiment and writes its artifacts to `config.out`. Nothing is
/// written when the computation fails.
pub fn run(config: &ExperimentConfig, emit_matrix: bool) -> Result<Artifacts, RunError> {
    let artifacts = execute(config, emit_matrix)?;
    output::write_artifacts(&config.out, config, &artifacts)?;
    Ok(artifacts)
}
