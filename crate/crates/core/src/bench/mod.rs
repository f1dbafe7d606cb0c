//! Experiment harness behind the `active-forecast` binary.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod report;

pub use commands::{cmd_run, cmd_sweep, cmd_train_experts, cmd_verify_bounds};
pub use config::ExperimentConfig;
pub use experiment::{Experiment, Permutation, PredictionTable, RunRecord};
