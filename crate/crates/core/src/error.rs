use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside its admissible range (mode index, block size, ...).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// An input object violates one of its invariants (normalization, hermiticity, ...).
    #[error("validation failed: {0}")]
    Validation(String),
    /// The input is well formed but the operation's precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A numerical routine did not reach the requested accuracy.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
