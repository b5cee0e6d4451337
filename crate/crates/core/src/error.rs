use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("ambiguous rank: eigenvalue {eigenvalue:.3e} lies within a factor 10 of tolerance {tolerance:.3e}")]
    AmbiguousRank { eigenvalue: f64, tolerance: f64 },

    #[error("compensating-matrix synthesis failed: best lambda_min = {best:.6e} after {iterations} iterations")]
    Synthesis { best: f64, iterations: usize },

    #[error("simulation aborted at t = {time:.6}: {reason}")]
    SimulationAbort { time: f64, reason: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
