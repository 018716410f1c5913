//! Experiment runner for the `pushpull` simulators: JSON configs, parallel
//! sweeps and CSV output. The `pushpull` binary is a thin wrapper over
//! [`load_config`] and [`run_experiment`].

pub mod config;
mod error;
pub mod output;
pub mod run;

pub use config::{load_config, Experiment, ExperimentConfig, Protocol, RcsSection, Sweep};
pub use error::HarnessError;
pub use output::{csv_bytes, run_experiment, write_csv, Report, COLUMNS};
pub use run::{expected_rows, run_sweep, Row};
