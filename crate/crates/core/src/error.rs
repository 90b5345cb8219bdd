use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base point shape mismatch: expected {expected}, got {found}")]
    DomainShape { expected: String, found: String },

    #[error("invalid base map: {0}")]
    InvalidBase(String),

    #[error("invalid fiber family: {0}")]
    InvalidFamily(String),

    #[error("inverse did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed coefficient list {text:?}: {reason}")]
    Coefficients { text: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
