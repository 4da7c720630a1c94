//! Configured experiment runs, their on-disk artifacts, and replay.

pub mod config;
pub mod output;
pub mod replay;
pub mod run;

pub use config::{ConfigOverrides, ExperimentConfig, ExperimentKind, OneOrMany, Tolerances};
pub use output::{fmt_f64, CsvTable, Manifest, MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE};
pub use replay::{replay, ReplayOutcome};
pub use run::{run, run_in, RunOutcome};
