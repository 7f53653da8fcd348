//! File formats and command-line front end for `sepqma-core`.

pub mod cli;
pub mod error;
pub mod formats;

pub use error::{CliError, CliResult};
