//! Experiment driver: cost-matched replicate runs of the samplers, reference
//! values, and report files.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod reference;
pub mod report;
pub mod targets;

pub use calibrate::{calibrate_alpha, Calibration};
pub use config::ExperimentSpec;
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_experiment_with, ExperimentReport};
pub use reference::{run_reference, ReferenceValues};
pub use report::emit_report;
