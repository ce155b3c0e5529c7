//! Library side of the `helfrich-disc` command-line driver.

pub mod commands;
pub mod config;
pub mod report;
pub mod study;
pub mod verify;

use helfrich::Error;

/// Process exit status of each outcome.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFICATION: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("verification failed: {} check(s)", .0.len())]
    Verification(Vec<verify::Failure>),
    #[error("{0}")]
    Numerical(Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => exit::USAGE,
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::InvalidInput(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::UnsupportedIntegrand(_)
            | Error::QuadratureUnavailable { .. }
            | Error::OutOfDomain { .. } => CliError::Usage(err.to_string()),
            Error::ConstraintViolation { .. }
            | Error::OrientationViolation { .. }
            | Error::FlatMismatch { .. } => {
                CliError::Verification(vec![verify::Failure::from_error("constraints", &err)])
            }
            _ => CliError::Numerical(err),
        }
    }
}
