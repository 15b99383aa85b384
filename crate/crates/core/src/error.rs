use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or incompatible shapes supplied by the caller.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value became NaN or infinite.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An operation was called out of order or with a stale cache.
    #[error("usage error: {0}")]
    Usage(String),

    /// Labels or samples that violate a dataset invariant.
    #[error("data error: {0}")]
    Data(String),

    #[error("cannot parse way {name:?} at position {position}: {reason}")]
    WayParse {
        name: String,
        position: usize,
        reason: String,
    },

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    /// Client/server exchange disagreed on layout or mode.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scoring error: {0}")]
    Scoring(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
