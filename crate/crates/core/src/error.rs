use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite amplitude at t = {time}; enable renormalization")]
    NonFinite { time: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("range [{lo}, {hi}] does not bracket the threshold (f(lo) = {f_lo:e}, f(hi) = {f_hi:e}, tol = {tol:e})")]
    BracketFailure {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        tol: f64,
    },
    #[error("time series too short: {periods:.2} periods after transient, need {required}")]
    TooShort { periods: f64, required: usize },
    #[error("intermediate state |{n},{m}> is resonant")]
    DegenerateIntermediate { n: i64, m: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;
