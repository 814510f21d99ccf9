//! File formats, persistence and the command line around `ajo-core`.
//!
//! - [`formats`]: chain files, PGM / digit-grid images, seed-graph JSON and DOT.
//! - [`state`]: versioned column state files.
//! - [`config`]: `key = value` experiment configuration.
//! - [`export`]: CSV time series and score tables.
//! - [`experiments`]: the runs behind each subcommand.
//! - [`cli`]: argument parsing and exit codes.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod export;
pub mod formats;
pub mod state;

pub use config::ExperimentConfig;
pub use error::{AjoError, Result};
