use std::io;
use std::path::{Path, PathBuf};

use nschsim_core::StepError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Io { .. } | Self::Format { .. } => 1,
            Self::Solver(_) => 2,
            Self::Verification(_) => 3,
        }
    }
}

impl From<StepError> for CliError {
    fn from(e: StepError) -> Self {
        if e.is_solver_failure() {
            Self::Solver(e.to_string())
        } else {
            Self::Validation(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Validation(format!("csv: {e}"))
    }
}
