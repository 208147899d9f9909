//! Library surface behind the `wsnet` binary: dataset loading and saving,
//! configuration files, report writers, and the error-to-exit-code mapping.
//! The binary in `main.rs` only parses arguments and dispatches here, so
//! integration tests can exercise every contract directly.

pub mod config;
pub mod dataset;
pub mod error;
pub mod report;

pub use config::{load_config, FileConfig};
pub use dataset::{load_dataset, save_dataset, DatasetBundle, FileStamp, MetaFile, Provenance};
pub use error::CliError;

/// Result alias used across the CLI crate.
pub type Result<T> = std::result::Result<T, CliError>;
