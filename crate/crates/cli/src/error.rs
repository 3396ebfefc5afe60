use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("trajectory {path}: {message}")]
    Trajectory { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] urnsim_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 bad input, 3 validation refusal, 4 numerical
    /// failure, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        use urnsim_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Trajectory { .. } => 2,
            CliError::Io { .. } => 1,
            CliError::CheckFailed(_) => 4,
            CliError::Model(e) => match e {
                E::IdentityBias | E::InvalidGraph(_) | E::IsolatedAgent(_) => 3,
                E::PowerIterationCap { .. }
                | E::ExclusivityViolated { .. }
                | E::ResidualTooLarge(_) => 4,
                _ => 2,
            },
        }
    }
}
