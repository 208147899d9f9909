//! CLI error type and its process exit codes: 0 success, 2 invalid
//! configuration, 3 training divergence, 1 anything else.

use std::path::PathBuf;
use thiserror::Error;
use wsnet_core::CoreError;

/// Everything the binary can fail with.
#[derive(Debug, Error)]
pub enum CliError {
    /// A dataset file had malformed content at a specific line.
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    /// A file-level dataset problem: missing file, row-count mismatch,
    /// inconsistent metadata.
    #[error("{}: {message}", path.display())]
    Dataset { path: PathBuf, message: String },

    /// The configuration (file or command line) is invalid. Exits with 2.
    #[error("invalid config ({source_name}): {message}")]
    Config { source_name: String, message: String },

    /// Failure propagated from the core pipeline. A divergence exits
    /// with 3.
    #[error(transparent)]
    Core(#[from] CoreError),

    /// Filesystem failure outside dataset parsing.
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    /// The documented process exit code for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(CoreError::Divergence { .. }) => 3,
            _ => 1,
        }
    }

    /// Wraps a filesystem failure with what the CLI was doing at the time.
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }
}
