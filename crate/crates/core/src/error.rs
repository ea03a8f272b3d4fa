use thiserror::Error;

#[derive(Debug, Error)]
pub enum NcgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("operator is not positive definite along a CG direction (p'Hp = {0:e})")]
    NotPositiveDefinite(f64),

    #[error("CG used {iterations} iterations without reaching ||r|| <= {eta:e} ||g|| (ratio {ratio:e})")]
    CgBudgetExhausted { iterations: usize, eta: f64, ratio: f64 },

    #[error("right-hand side is zero; stationarity must be detected before calling CG")]
    ZeroGradient,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reference solve failed: {0}")]
    ReferenceSolve(String),

    #[error("optimality gap {0:e} is negative beyond rounding; the reference minimum is wrong")]
    NegativeGap(f64),

    #[error("no reference minimum value is available for this problem")]
    MissingReference,

    #[error("noise allowance must be positive, got {0:e}")]
    NonPositiveAllowance(f64),

    #[error("sample size {size} outside [1, {population}]")]
    SampleSize { size: usize, population: usize },

    #[error("gradient accuracy loop exhausted {0} passes")]
    GammaLoopExhausted(usize),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NcgError>;

pub(crate) fn invalid(msg: impl Into<String>) -> NcgError {
    NcgError::InvalidParameter(msg.into())
}
