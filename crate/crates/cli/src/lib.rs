//! Experiment driver: configs in, CSV tables out.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod table;

pub use checks::{check_decreasing, CheckOutcome, Strictness};
pub use config::{load_config, Experiment, ExperimentConfig, PhaseSpec, StateSpec, SCHEMA_VERSION};
pub use error::CliError;
pub use experiments::{run, Report, RunOptions};
pub use table::{write_csv, Cell, Sentinel, Table};
