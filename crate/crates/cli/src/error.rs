use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("cannot serialize effective config: {0}")]
    Echo(#[from] toml::ser::Error),

    #[error(transparent)]
    Core(#[from] fedsplit::Error),

    /// One or more invariant checks reported a violation.
    #[error("{failed} of {total} checks failed")]
    CheckFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn config(key: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// 2 for bad configuration or input data, 3 for numeric failures,
    /// 1 for everything else (including failed checks).
    pub fn exit_code(&self) -> u8 {
        use fedsplit::Error as E;
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Config { .. } => 2,
            CliError::Core(E::Config(_) | E::WayParse { .. } | E::Format { .. } | E::Data(_)) => 2,
            CliError::Core(E::Numeric(_)) => 3,
            _ => 1,
        }
    }
}
