use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the domain of a reward function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Exhaustive enumeration refused because the candidate set is too large.
    #[error("brute force refused: {size} scored requests exceeds the enumeration limit of {limit}")]
    BruteForceLimit { size: usize, limit: usize },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: u64,
        column: String,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end: `2` for I/O
    /// failures, `1` for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
