//! Experiment runner for the `zopt` optimizers: TOML configuration, seeded
//! repeats, trajectory CSVs, JSON-lines summaries, landscape scans and the
//! two-stage pulse tune-up.

pub mod config;
mod error;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, ResolvedRun, Variant};
pub use error::BenchError;
pub use experiment::{
    landscape_scan, run_experiment, run_once, run_tuneups, two_stage_tuneup, ExperimentReport, FinalRb, RunOutcome,
    ScanResult, StageReport, TuneupReport, VariantReport,
};
