//! Experiment driver behind the `dre` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::ExperimentConfig;
pub use run::{run, run_path, RunOptions, RunSummary};
