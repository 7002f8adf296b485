use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of a market instance does not hold.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity error: more than {limit} feasible matchings")]
    Capacity { limit: usize },

    /// The requested operation needs a capability the input lacks,
    /// e.g. exact enumeration over a continuous law.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
