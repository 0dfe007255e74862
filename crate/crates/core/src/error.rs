use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("sketch index {index} out of range for universe of size {universe}")]
    IndexOutOfRange { index: u128, universe: u128 },

    #[error("sketch configurations differ; only sketches with identical configs can be merged")]
    ConfigMismatch,

    #[error("point outside the net domain: {0}")]
    Domain(String),

    #[error("net universe does not fit in 128 bits")]
    Overflow,

    #[error("input is empty")]
    EmptyInput,

    #[error("iteration budget of {budget} exhausted without an empty violator set")]
    IterationBudgetExceeded { budget: usize },

    #[error("input violates declared bounds: {0}")]
    InputBounds(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stream is not strict turnstile: {0}")]
    StrictTurnstile(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
