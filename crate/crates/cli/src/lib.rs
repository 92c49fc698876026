//! JSON formats and the `pfr` command-line front end.

pub mod commands;
pub mod json;

pub use commands::{run_command, Output};
