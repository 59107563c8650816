//! Command-line front end: scenario generation, experiment runs and the
//! oracle check.

pub mod commands;
pub mod config;

pub use commands::{cmd_generate, cmd_oracle, cmd_run, Manifest, OracleRow, RunOutcome};
pub use config::RunConfig;
