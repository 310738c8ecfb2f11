use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes. Stable: scripts depend on them.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const GRID: u8 = 3;
    pub const EMPTY: u8 = 4;
    pub const NOT_CONVERGED: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sqz_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use sqz_core::Error as E;
        match self {
            Self::Core(E::Parse(_) | E::Io(_)) => exit::PARSE,
            Self::Core(E::GridMismatch(_) | E::OutOfRange { .. }) => exit::GRID,
            Self::Core(E::Empty(_)) => exit::EMPTY,
            Self::Core(_) => exit::OTHER,
            Self::Read { .. } | Self::Json { .. } | Self::Usage(_) => exit::PARSE,
            Self::Write { .. } => exit::OTHER,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
