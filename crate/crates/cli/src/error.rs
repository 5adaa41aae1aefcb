use std::fmt;

use fscil_core::Error as CoreError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Config = 2,
    Data = 3,
    Numerical = 4,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// An error carrying the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            status: ExitStatus::Config,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self {
            status: ExitStatus::Data,
            error: error.into(),
        }
    }

    pub fn context(self, message: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            status: self.status,
            error: self.error.context(message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Classification of library errors into exit statuses.
pub fn status_of(e: &CoreError) -> ExitStatus {
    match e {
        CoreError::NonFinite(_) | CoreError::ZeroNorm(_) | CoreError::StaleTape | CoreError::TargetOutOfRange { .. } => {
            ExitStatus::Numerical
        }
        CoreError::Format { .. }
        | CoreError::Io(_)
        | CoreError::DimensionMismatch { .. }
        | CoreError::Empty(_)
        | CoreError::UnknownClass(_) => ExitStatus::Data,
        CoreError::InvalidArgument(_) | CoreError::ProtocolViolation(_) => ExitStatus::Config,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self {
            status: status_of(&e),
            error: e.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}

/// Attaches a message to fallible library or io results.
pub trait Context<T> {
    fn ctx(self, message: impl fmt::Display + Send + Sync + 'static) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn ctx(self, message: impl fmt::Display + Send + Sync + 'static) -> CliResult<T> {
        self.map_err(|e| e.into().context(message))
    }
}
