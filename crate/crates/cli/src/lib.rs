//! Configuration, CSV persistence and run dispatch behind the `posflow`
//! executable.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv_io;
pub mod error;
pub mod profiles;
pub mod runner;

pub use config::{parse_config, Mode, RunConfig};
pub use error::CliError;
pub use runner::{run, RunReport, Verdict};
