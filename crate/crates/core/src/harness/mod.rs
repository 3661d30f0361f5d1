//! Experiment runner: sweeps methods × annealing times × harmonic counts over
//! instance sets and writes per-run rows plus aggregated summaries.

pub mod aggregate;
pub mod cli;
pub mod config;
pub mod plot;
pub mod run;

pub use aggregate::{aggregate, SummaryRow};
pub use cli::cli_main;
pub use config::{ExperimentConfig, InstanceSource, Method, ProblemKind};
pub use run::{run_experiment, run_sweep, ResultRow};
