use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: u64, message: String },

    #[error("text spec `{spec}` matches no field in any record")]
    TextSpecUnmatched { spec: String },

    #[error("invalid text template: {0}")]
    Template(String),

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("embedding provider error: {0}")]
    Provider(String),

    #[error("profile error: {0}")]
    Profile(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn undefined(metric: &'static str, reason: impl Into<String>) -> Self {
        Error::UndefinedMetric {
            metric,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the tool itself rather than by its inputs.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
