//! Batch experiment driver: config files, trials, sweeps, statistics and CSV
//! output.

pub mod config;
pub mod csv;
pub mod stats;
pub mod sweep;
pub mod trial;
pub mod validate;

pub use config::{load_config, parse_config, Experiment, Output, SweepSpec, SweepVariable, SCHEMA};
pub use csv::{emit_csv, parse_csv, render_csv, CsvRow};
pub use sweep::{best_dimension, mi_proportion_sweep, run_point, run_sweep, BestDimension, MiProportion};
pub use trial::{draw_trial, evaluate_trial, run_trial, Scheme, TrialOutcome, TrialRecord};
