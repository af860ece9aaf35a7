//! Experiment runner: JSON configs in, per-run and aggregate CSVs plus a manifest out.

pub mod acceptance;
pub mod bounds;
pub mod config;
pub mod error;
pub mod experiment;
pub mod problem;
pub mod records;

pub use config::{ExperimentConfig, InitSpec, ProblemSpec, ScheduleGrid};
pub use error::{HarnessError, Result};
pub use experiment::{compare_strategies, execute, run_experiment, ExperimentOutput, Mode, OutputFiles};
pub use records::{aggregate, read_rows, write_rows, AggregateRow, ResultRow};
