use alloc::string::String;
use core::fmt;

/// Errors produced by the detector core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated an operation's precondition.
    InvalidArgument(String),
    /// A binary feature tensor could not be decoded.
    Format { offset: usize, reason: String },
    /// Game parameters make the replicator update ill-defined.
    Configuration(String),
    /// A linear solve missed its residual bound.
    Numerical { residual: f64, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Format { offset, reason } => {
                write!(f, "format error at byte {offset}: {reason}")
            }
            Error::Configuration(msg) => write!(f, "configuration error: {msg}"),
            Error::Numerical { residual, reason } => {
                write!(f, "numerical failure: {reason} (residual {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
