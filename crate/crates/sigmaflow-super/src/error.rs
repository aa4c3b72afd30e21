use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuperError {
    #[error("generator {index} out of range for {n} generators")]
    GeneratorRange { index: usize, n: usize },
    #[error("expected a {expected} element, got {got}")]
    Parity { expected: &'static str, got: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, SuperError>;
