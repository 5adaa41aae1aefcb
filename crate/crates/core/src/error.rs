use std::io;

use thiserror::Error;

use crate::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("tape does not belong to these parameters (stale or mismatched)")]
    StaleTape,

    #[error("target index {index} out of range for {len} logits")]
    TargetOutOfRange { index: usize, len: usize },

    #[error("zero-norm vector in {0}")]
    ZeroNorm(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown class {0}")]
    UnknownClass(ClassId),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }

    /// True for malformed data or files.
    pub fn is_data(&self) -> bool {
        matches!(self, Error::Format { .. } | Error::Io(_))
    }
}

/// Checks that two lengths agree.
#[inline]
pub(crate) fn check_dim(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        })
    }
}
