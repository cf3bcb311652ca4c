use std::fmt;

use lrc_core::Error;

/// Process exit codes.
pub const EXIT_GRADCHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_UNSATISFIED: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    /// Invalid-argument and capacity errors become usage errors; everything
    /// else raised while reading inputs is a data error.
    pub fn from_data(err: Error) -> Self {
        match err {
            Error::InvalidArgument(_) | Error::Capacity(_) => Self::usage(err.to_string()),
            Error::NonFiniteLoss { .. } | Error::Evaluation(_) => err.into(),
            _ => Self::data(err.to_string()),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InvalidArgument(_) | Error::Capacity(_) => EXIT_USAGE,
            Error::NonFiniteLoss { .. } | Error::Evaluation(_) => EXIT_NUMERIC,
            Error::Parse { .. } | Error::Format(_) | Error::Io(_) => EXIT_DATA,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::data(err.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
