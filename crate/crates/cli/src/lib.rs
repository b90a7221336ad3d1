//! Configuration, replicate execution and output writing for the `evill`
//! command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{EstimationConfig, RunConfig, RunPlan};
pub use error::{CliError, Result};
