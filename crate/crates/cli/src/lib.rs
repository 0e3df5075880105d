//! Library side of the `repeaterlab` command: config parsing, subcommand
//! drivers, and CSV output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;
