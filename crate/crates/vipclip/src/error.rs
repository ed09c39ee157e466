use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probe requires a constant the problem does not certify: {0}")]
    MissingConstant(&'static str),

    #[error("schedule precondition violated: {0}")]
    SchedulePrecondition(String),

    #[error("fixed-point iteration did not converge within {max_iters} iterations (last B = {last})")]
    FixedPointStalled { max_iters: usize, last: f64 },

    #[error("restricted gap is defined for monotone problems only: lambda_min(sym A) = {0:e}")]
    NonMonotone(f64),

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("estimator bounds need ||F(x)|| <= lambda/2: ||F(x)|| = {norm_f}, lambda/2 = {half_lambda}")]
    LemmaPrecondition { norm_f: f64, half_lambda: f64 },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
