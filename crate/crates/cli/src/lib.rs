//! Library side of the `pkahler` command-line tool: configuration, the
//! invariant suite, subcommand bodies and output rendering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suite;

pub use config::{Grid, OutputFormat, ProfileChoice, RunConfig};
pub use error::CliError;
pub use suite::{run_check, InvariantReport};
