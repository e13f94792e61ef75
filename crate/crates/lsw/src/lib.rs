//! File formats and the `lsw` command-line pipeline on top of `lsw-core`.

pub mod cli;
pub mod dataio;
pub mod error;

pub use error::{CliError, Result};
