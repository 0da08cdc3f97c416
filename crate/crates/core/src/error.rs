use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value {value} when evaluating at point {point} (index {index})")]
    Evaluation {
        index: usize,
        point: f64,
        value: f64,
    },

    #[error("insufficient history: need {required} observations, have {available}")]
    Length { required: usize, available: usize },

    #[error("policy produced mean {mu} outside [{lo}, {hi}] at step {step}")]
    Simulation {
        step: usize,
        mu: f64,
        lo: f64,
        hi: f64,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Broad category: `true` for caller mistakes (bad parameters), `false`
    /// for problems with input data or the environment.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::Simulation { .. })
    }
}
