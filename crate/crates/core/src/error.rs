use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("factor index {index} out of range for {factors} factors")]
    FactorOutOfRange { index: usize, factors: usize },

    #[error("site index {index} out of range for {sites} sites")]
    SiteOutOfRange { index: usize, sites: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("operator is not a valid state: {0}")]
    InvalidState(String),

    #[error("state is not normalized (trace = {0})")]
    NotNormalized(f64),

    #[error("trace {0} exceeds 1")]
    TraceExceedsOne(f64),

    #[error("support of the first argument is not contained in the support of the second")]
    SupportViolation,

    #[error("smoothing parameter {0} outside the allowed range")]
    EpsilonOutOfRange(f64),

    #[error("channel is not unital (residual {0:.3e})")]
    NotUnital(f64),

    #[error("channel is not trace preserving (residual {0:.3e})")]
    NotTracePreserving(f64),

    #[error("SDP solver did not converge after {iterations} iterations (best gap {gap:.3e})")]
    SdpNotConverged { iterations: usize, gap: f64 },

    #[error("problem exceeds the dense budget: {0}")]
    DimensionBudget(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("bisection failed: {0}")]
    BisectionFailed(String),

    #[error("zero-norm state")]
    ZeroNorm,

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("uncertified input: {0}")]
    Uncertified(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
