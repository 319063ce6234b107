use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state {state:?} lies outside the domain {domain}")]
    OutsideDomain { state: Vec<f64>, domain: String },

    #[error("parameter {theta:?} lies outside the support of {law}")]
    ThetaOutsideSupport { theta: Vec<f64>, law: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no equilibrium sampler for this model ({0})")]
    EquilibriumUnavailable(String),

    #[error("size mismatch: {left} vs {right} samples")]
    SizeMismatch { left: usize, right: usize },

    #[error("non-finite sample value at index {0}")]
    NonFinite(usize),

    #[error("exact matching limited to N <= {max} (got {n}); use the sliced estimator")]
    MatchingTooLarge { n: usize, max: usize },

    #[error("rate function undefined: {0}")]
    RateUndefined(String),

    #[error("zero-error sweep: every error is below {threshold:e}, no rate can be fitted")]
    ZeroErrorSweep { threshold: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_step(self, step: u64) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
