use thiserror::Error;

/// Errors produced by the estimators, solvers and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("signed measure where a nonnegative one is required")]
    SignedInput,

    #[error("degenerate radii schedule: condition number {condition:e} exceeds {limit:e}")]
    DegenerateSchedule { condition: f64, limit: f64 },

    #[error("rejection sampler exceeded {rounds} rounds without accepting")]
    SamplerExhausted { rounds: u64 },

    #[error("transport solver failed: {0}")]
    Solver(String),

    #[error("epsilon {eps} outside the validity window (must be below {window})")]
    OutOfWindow { eps: f64, window: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
