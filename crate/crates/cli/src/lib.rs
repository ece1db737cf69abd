//! Command-line front end: configuration, experiment pipelines and output
//! writers behind the `qni` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod verify;

pub use commands::{run, Cli};
pub use config::Config;
pub use error::CliError;
