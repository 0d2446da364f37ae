//! Error type shared by every module, with the process exit code each
//! variant maps to on the command line.

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("encoding error at record {index}: {reason}")]
    Encode { index: u64, reason: String },

    #[error("log format error: {0}")]
    Format(String),

    #[error("truncated log: {decoded} of {expected} records decoded")]
    Truncated { decoded: u64, expected: u64 },

    #[error("allocation error: {requested} pages requested, short by {shortfall}")]
    Allocation { requested: u64, shortfall: u64 },

    #[error("migration error: {requested} pages need frames but only {fits} fit")]
    Capacity { requested: u64, fits: u64 },

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("telemetry error: {0}")]
    Telemetry(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("comparison error: {0}")]
    Comparison(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit status used by the `memtier` binary for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            Error::Encode { .. } | Error::Format(_) | Error::Truncated { .. } => 4,
            Error::Allocation { .. } | Error::Capacity { .. } => 5,
            Error::Comparison(_) => 6,
            Error::Lookup(_) | Error::Telemetry(_) | Error::Measurement(_) => 1,
        }
    }

    /// Short machine-readable tag, used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Encode { .. } => "encode",
            Error::Format(_) => "format",
            Error::Truncated { .. } => "truncated",
            Error::Allocation { .. } => "allocation",
            Error::Capacity { .. } => "capacity",
            Error::Lookup(_) => "lookup",
            Error::Telemetry(_) => "telemetry",
            Error::Measurement(_) => "measurement",
            Error::Comparison(_) => "comparison",
        }
    }
}
