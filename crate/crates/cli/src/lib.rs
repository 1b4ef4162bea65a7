//! Command-line layer over `qflow-core`: configuration, the solution cache,
//! versioned JSON documents, CSV sweeps and the `verify` report.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod document;
pub mod error;
pub mod grid;

pub use cli::{run, Outcome};
pub use error::{CliError, CliResult};
