use std::path::PathBuf;

use sigmaflow_core::SigmaError;
use sigmaflow_super::SuperError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// Invalid or inconsistent configuration; the message names the field.
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Super(#[from] SuperError),
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for configuration and input errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } | RunError::Super(_) => 1,
            RunError::Sigma(e) => match e {
                SigmaError::NonFinite { .. }
                | SigmaError::StepRejected { .. }
                | SigmaError::Untestable(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;
