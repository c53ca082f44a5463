//! Experiment runners, problem generation and the validation suite.

pub mod config;
pub mod data;
pub mod runner;
pub mod validation;

pub use config::{ExperimentId, Method, RunConfig};
pub use data::{gen_dataset, gen_target, uniform_init, DatasetSpec, TargetSpec};
pub use runner::{run_experiment, ExperimentReport, VariantOutcome};
pub use validation::{run_validation, CheckResult, ValidationReport};
