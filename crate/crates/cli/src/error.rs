use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("parse error at line {line}, column '{column}': cannot read '{value}' as a number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("missing value at line {line}, column '{column}'")]
    MissingValue { line: u64, column: String },
    #[error(transparent)]
    Model(#[from] robustse::Error),
    #[error(transparent)]
    Simulation(#[from] robustse_montecarlo::SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Every error that reaches the top level is a usage or input problem.
    /// Estimator failures under `--strict` are signalled separately.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
