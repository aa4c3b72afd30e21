use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigmaError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid modulus: Im tau = {0} must be positive")]
    InvalidModulus(f64),
    #[error("invalid conformal factor: {0}")]
    InvalidConformalFactor(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },
    #[error("step rejected {count} times in a row at step {step}")]
    StepRejected { step: usize, count: usize },
    #[error("untestable: {0}")]
    Untestable(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SigmaError>;
