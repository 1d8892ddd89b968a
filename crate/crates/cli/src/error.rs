use std::path::PathBuf;

use thiserror::Error;

/// Exit codes for scripting.
pub const EXIT_REJECT: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_IO: u8 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}: {message}")]
    Malformed { path: String, line: u64, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] edf_calibration::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use edf_calibration::Error as E;
        match self {
            CliError::Malformed { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Library(e) => match e {
                E::Config(_) | E::DegenerateSplit { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
