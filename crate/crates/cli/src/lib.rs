//! Batch front end for `memkernel`: JSON model configurations in, CSV
//! trajectories and JSON certification reports out.

pub mod app;
pub mod config;
pub mod error;
pub mod report;

pub use app::{check, run, Options, Outcome};
pub use error::CliError;
