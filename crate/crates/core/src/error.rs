use thiserror::Error;

/// Failure classes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed argument: wrong dimension, non-finite value, empty input.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A point lies outside the model's state space (e.g. non-positive price).
    #[error("domain error: {0}")]
    Domain(String),
    /// An admissible path left the state space at the given path time.
    #[error("path left the domain at path time {time}")]
    DomainExit { time: f64 },
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The operation does not exist for this model or regime.
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    /// Inputs outside the window where the evaluator is numerically reliable.
    #[error("outside the accuracy window: {0}")]
    Accuracy(String),
    /// An iterative solver failed to converge.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// Reading or writing a persisted artefact failed.
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, err: impl FnOnce() -> Error) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}
