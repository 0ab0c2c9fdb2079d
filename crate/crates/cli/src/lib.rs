//! Configuration and orchestration for computing standing waves of the
//! complex Ginzburg-Landau equation from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
