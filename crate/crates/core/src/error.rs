use alloc::string::String;
use core::fmt;

/// Errors raised by the field, ring, matrix and verification layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Arguments violate a precondition (composite `p`, mismatched
    /// dimensions, malformed elements, ...).
    InvalidInput(String),
    /// The requested dimension exceeds the configured size guard.
    SizeLimit { requested: u64, limit: u64 },
    /// Inversion of the zero element.
    DivisionByZero,
    /// The operation is not defined for these parameters (e.g. Weil sums
    /// in characteristic 2).
    Unsupported(String),
    /// A fixed-width coefficient left its representable range.
    Overflow,
    /// A construction produced an object that fails its own postcondition.
    /// This always indicates a bug.
    Internal(String),
    /// A mathematical claim did not hold for the supplied data.
    VerificationFailure(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SizeLimit { requested, limit } => {
                write!(f, "dimension {requested} exceeds the size guard {limit}")
            }
            Error::DivisionByZero => f.write_str("division by zero"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Overflow => f.write_str("integer coefficient overflow"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
            Error::VerificationFailure(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn internal(msg: impl Into<String>) -> Error {
    Error::Internal(msg.into())
}
