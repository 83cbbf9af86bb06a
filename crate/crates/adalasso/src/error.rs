use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("noise level sigma_eps is required but not set on the problem")]
    MissingSigma,

    #[error("operation requires a problem with known true coefficients")]
    MissingTruth,

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("enumeration of {subsets} subsets exceeds cap {cap}; use sampled mode")]
    EnumerationCap { subsets: u128, cap: u128 },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
