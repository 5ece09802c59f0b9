//! Experiment orchestration and the `infosel` command-line interface.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, ExperimentId, SCHEMA_VERSION};
pub use experiment::{run_experiment, ExperimentReport};
pub use report::report_tables;
