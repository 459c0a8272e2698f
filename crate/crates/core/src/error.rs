use thiserror::Error;

use crate::metric::MetricViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("empty point set")]
    EmptySet,

    #[error("index {index} out of range for a space of {size} points")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid metric: {} violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidMetric(Vec<MetricViolation>),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("point {0} is not in the domain")]
    NotInDomain(usize),

    #[error("values.{0}: empty")]
    EmptyValue(usize),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown condition id `{0}`")]
    UnknownCondition(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error("trace has not converged numerically")]
    NotConverged,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("beta schedule too shallow: need beta <= {needed}, smallest certified is {smallest}")]
    ScheduleDepth { needed: f64, smallest: f64 },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Whether the error points at bad input rather than a failure of the run.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::EmptyTrace | Error::NotConverged
        )
    }
}
