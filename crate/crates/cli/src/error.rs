use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Runtime failure not covered below (I/O, failed verification).
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BLOW_UP: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("blow-up: {0}")]
    BlowUp(String),

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(pesim_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::BlowUp(_) => exit::BLOW_UP,
            CliError::NotConverged(_) => exit::NOT_CONVERGED,
            CliError::Verification(_) | CliError::Io { .. } | CliError::Core(_) => exit::FAILURE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<pesim_core::Error> for CliError {
    /// Argument errors raised while running come from the configuration.
    fn from(e: pesim_core::Error) -> Self {
        use pesim_core::Error as E;
        match e {
            E::BlowUp { .. } | E::NonFinite(_) => CliError::BlowUp(e.to_string()),
            E::InvalidArgument(_)
            | E::InvalidTruncation(_)
            | E::DimensionMismatch { .. }
            | E::GridTooSmall(_)
            | E::Aliasing { .. }
            | E::Parse(_)
            | E::BasisMismatch => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
