//! File formats, run configuration and the command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;

pub use error::{CliError, Result};
