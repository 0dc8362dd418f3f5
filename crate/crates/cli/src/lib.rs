//! Command-line front end: sample files, configuration, replicated runs and
//! result files.

pub mod config;
pub mod csvio;
pub mod error;
pub mod parse;
pub mod run;

pub use config::Cli;
pub use error::{CliError, CliResult};
pub use run::execute;
