use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("degenerate efficiency: no period can be accepted (E underflows to 0)")]
    DegenerateEfficiency,

    #[error("zero success probability: quantum sample cost is unbounded")]
    ZeroSuccess,

    #[error("infeasible constraint: no intensity reaches correct probability {constraint}")]
    Infeasible { constraint: f64 },

    #[error("cannot invert click statistics: {0}")]
    NonInvertible(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("session is closed")]
    SessionClosed,

    #[error("guess has {got} indices, expected {expected}")]
    GuessSize { expected: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
