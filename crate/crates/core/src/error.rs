use thiserror::Error;

/// Errors produced anywhere in the planning / control stack.
#[derive(Debug, Error)]
pub enum KdfError {
    #[error("configuration signature mismatch: expected ({0}, {1}), found ({2}, {3})")]
    SignatureMismatch(usize, usize, usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interpolation parameter {0} outside [0, 1]")]
    InterpolationOutOfRange(f64),

    #[error("extended check policy `{0}` is not valid for this robot")]
    UnsupportedPolicy(&'static str),

    #[error("no free sample found after {0} attempts (inflation too large?)")]
    SampleBudgetExhausted(usize),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("no path found after {iterations} iterations")]
    NoPathFound { iterations: usize },

    #[error("roadmap query failed: {0}")]
    QueryFailed(String),

    #[error(
        "trajectory validation failed at {} sample(s), first at t = {first:.4}",
        count
    )]
    TrajectoryInvalid {
        count: usize,
        first: f64,
        times: Vec<f64>,
    },

    #[error("simulation produced a non-finite value at t = {t:.6}: {what}")]
    NonFinite { t: f64, what: &'static str },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, KdfError>;
