use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("solver: {0}")]
    Solver(#[from] posflow_core::Error),

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

    #[error("invariant region violated with satisfied preconditions: {0}")]
    RegionViolation(String),
}

impl CliError {
    /// 0 success, 1 config, 2 solver or I/O, 3 region violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) | CliError::Io { .. } | CliError::Csv { .. } => 2,
            CliError::RegionViolation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
