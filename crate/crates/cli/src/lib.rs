//! Configuration, experiment orchestration and file output for the
//! `atom-me` command-line tool.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{parse_config, Args, EquationChoice, Experiment, Format, RunConfig, UsageError};
pub use experiments::{run_experiment, Outcome, RunError};
