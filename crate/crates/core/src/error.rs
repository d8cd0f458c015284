use thiserror::Error;

/// Errors raised across the simulation, estimation and testing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interval index {index} out of range 1..={n}")]
    IntervalOutOfRange { index: usize, n: usize },

    #[error("demeaned realized variance needs at least 2 steps per interval, got {0}")]
    DemeanTooFewSteps(usize),

    #[error("degenerate volatility {vol:e} in interval {interval} (empty or corrupt interval)")]
    DegenerateVolatility { interval: usize, vol: f64 },

    #[error("degenerate regression on prefix of length {k}")]
    DegenerateRegression { k: usize },

    #[error("every entry of the detector trace is degenerate")]
    AllDegenerate,

    #[error("no built-in critical value for {kind} at level {level}")]
    UnsupportedCriticalValue { kind: &'static str, level: f64 },

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("unequal number of bars per interval: {0}")]
    UnequalBars(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
