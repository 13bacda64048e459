use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across data ingestion, model fitting, selection and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}, column `{column}`: cannot read {value:?} as a number")]
    Parse { row: usize, column: String, value: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("domain error at row {row}, column `{column}`: {value} is not a valid {kind} value")]
    Domain {
        row: usize,
        column: String,
        value: String,
        kind: &'static str,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Schema(_)
            | Error::Domain { .. }
            | Error::InvalidInput(_)
            | Error::Undefined(_) => 3,
            Error::Runtime(_) => 4,
        }
    }
}
