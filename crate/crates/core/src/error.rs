use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition on an input value does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A dataset or model file failed validation. `row` is 1-based and counts
    /// the header line, so it matches what a text editor shows.
    #[error("validation error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Validation { row: Option<usize>, message: String },

    /// No usable samples were found.
    #[error("no samples: {0}")]
    NoData(String),

    /// Training produced a non-finite loss or parameter.
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    /// A quantity is mathematically undefined for the given data.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(row: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Validation {
            row,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-parsable class name, used by the command-line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "Domain",
            Error::Precondition(_) => "Precondition",
            Error::Validation { .. } => "Validation",
            Error::NoData(_) => "NoData",
            Error::Training { .. } => "Training",
            Error::Undefined(_) => "Undefined",
            Error::Io { .. } => "Io",
            Error::Json { .. } => "Json",
            Error::Csv { .. } => "Csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
