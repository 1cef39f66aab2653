//! Experiment harness: configuration, the experiment commands and their
//! CSV/JSON output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod functions;
pub mod output;

pub use commands::Command;
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use output::{read_records, CsvRecord, Report};
