//! Experiment harness around `rcdnet`: TOML configs, multi-seed runs and CSV
//! traces with metadata headers.

pub mod baselines;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod distfile;
pub mod error;

pub use config::Config;
pub use csvio::Table;
pub use error::CliError;
