use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: feature indices must be strictly increasing")]
    Format { line: usize },
    #[error("no samples")]
    Empty,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("component index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing constant `{0}`")]
    MissingConstant(&'static str),
    #[error("point is not stationary: gradient norm {residual:e} exceeds {tolerance:e}")]
    NotStationary { residual: f64, tolerance: f64 },
    #[error("non-finite iterate at epoch {epoch}, inner step {inner}")]
    Divergence { epoch: usize, inner: usize },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("weights were not recorded for this run")]
    WeightsNotRecorded,
}

pub type Result<T> = std::result::Result<T, Error>;
