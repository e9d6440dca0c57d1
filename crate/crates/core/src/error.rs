use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space dimension must be at least 3, got {0}")]
    Dimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected} values, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("field value at node {index} is {value}; profiles must be finite and non-negative")]
    InvalidValue { index: usize, value: f64 },

    #[error("exponent constraint violated: {0}")]
    Exponents(String),

    #[error("degenerate field: {0}")]
    Degenerate(&'static str),

    #[error("tridiagonal solve broke down at row {0}")]
    Singular(usize),

    #[error("non-finite state at t = {0}")]
    NonFinite(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("no seed produced a finite ratio")]
    NoFiniteSeed,

    #[error("estimate {cstar} exceeds the Sobolev certificate {bound}")]
    Certificate { cstar: f64, bound: f64 },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep the message only.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
