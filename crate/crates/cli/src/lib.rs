//! Library side of the `cenet` command-line tool.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod montecarlo;

pub use args::Cli;
pub use commands::{run, Outcome};
pub use error::{CliError, Result};
