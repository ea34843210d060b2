//! Configuration, study runner and result files behind the `hal` binary.

pub mod cli;
pub mod config;
pub mod output;
pub mod study;

pub use config::{load_config, parse_config, Format, RunConfig, Workers};
