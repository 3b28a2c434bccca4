use thiserror::Error;

/// Errors raised by the solver and the large-deviation layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("states live on different bases")]
    BasisMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("collocation grid too small: {0}")]
    GridTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("blow-up at t = {time}: V-norm {norm:e} exceeds ceiling {ceiling:e}")]
    BlowUp { time: f64, norm: f64, ceiling: f64 },

    #[error("singular pressure system")]
    SingularPressure,

    #[error("frequency {n} aliases on a grid of {intervals} intervals")]
    Aliasing { n: usize, intervals: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
