use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not monotone: smallest eigenvalue of the symmetric part is {0:e}")]
    NotMonotone(f64),

    #[error("matrix is not positive semidefinite: smallest eigenvalue is {0:e}")]
    NotPositiveSemidefinite(f64),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("missing reference: {0}")]
    MissingReference(String),

    #[error("reference solve did not converge: {0}")]
    NotConverged(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, SplitError>;
