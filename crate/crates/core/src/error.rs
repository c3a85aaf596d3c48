use thiserror::Error;

/// Errors raised by the reduction and solving pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),
    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("row sampling stagnated at support {support} after {steps} steps without shrinking (target {target})")]
    Stagnation {
        support: usize,
        steps: usize,
        target: usize,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("every restart started in the flat region: {0}")]
    FlatStart(String),
    #[error("brute-force search supports d <= 2, got d = {0}")]
    UnsupportedDimension(usize),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Domain(_)
            | Error::Shape(_)
            | Error::Index { .. }
            | Error::UnsupportedDimension(_)
            | Error::Format(_) => 2,
            Error::Convergence { .. } | Error::Stagnation { .. } | Error::FlatStart(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {v}")))
    }
}
