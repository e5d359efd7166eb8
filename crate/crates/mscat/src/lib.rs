//! Experiment runner for the multiple-scattering solvers in `mscat-core`.

// Checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use error::CliError;
