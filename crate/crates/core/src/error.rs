use thiserror::Error;

/// Errors raised by constructors and algorithms when their preconditions
/// do not hold. Property violations are never errors; they are reported
/// in-band (see [`crate::agreement::DecisionReport`]).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("path tree too large: {n}^{depth} exceeds the {limit} value guard")]
    TooLarge { n: usize, depth: usize, limit: u64 },

    #[error("process id {id} out of range for n = {n}")]
    ProcessOutOfRange { id: usize, n: usize },

    #[error("path {0} is malformed or outside the round range")]
    BadPath(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed fixture: {0}")]
    Fixture(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Fixture(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
