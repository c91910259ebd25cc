use thiserror::Error;

/// Errors for domain-generalization operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("problem too large: {actual} points exceeds cap {cap}")]
    TooLarge { actual: usize, cap: usize },

    #[error("matrix is not positive semidefinite within tolerance")]
    NotPsd,

    #[error("objective diverged (non-finite value)")]
    Diverged,

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
