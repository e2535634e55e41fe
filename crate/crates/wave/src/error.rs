use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line driver, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("checkpoint schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u64, expected: u32 },
    #[error("config hash {found} does not match the checkpoint's {expected}; pass --force to resume anyway")]
    ConfigHashMismatch { found: String, expected: String },
    #[error(transparent)]
    Solver(wave_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::SchemaMismatch { .. } | Self::ConfigHashMismatch { .. } => 2,
            Self::Solver(wave_core::Error::Sink(_)) => 4,
            Self::Solver(_) => 3,
            Self::Io { .. } | Self::Parse { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Validation(_) => "validation",
            Self::SchemaMismatch { .. } => "schema_mismatch",
            Self::ConfigHashMismatch { .. } => "config_hash_mismatch",
            // the sink only fails on writes
            Self::Solver(wave_core::Error::Sink(_)) => "io",
            Self::Solver(_) => "solver",
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
        }
    }
}

impl From<wave_core::Error> for CliError {
    fn from(e: wave_core::Error) -> Self {
        use wave_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::BadExtent { .. }
            | E::AnchorNotOnGrid { .. }
            | E::ParameterNotMonotone { .. } => Self::Validation(e.to_string()),
            other => Self::Solver(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
