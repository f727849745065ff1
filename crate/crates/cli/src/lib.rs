//! Configuration, sweeps, CSV output and figures for the `moac` runner.

pub mod config;
pub mod error;
pub mod plot;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use plot::{emit_plots, plot_csv};
pub use sweep::{read_rows, run_sweep, slot_sim, write_rows, Failure, ResultRow, SweepOutput, CSV_HEADER};
