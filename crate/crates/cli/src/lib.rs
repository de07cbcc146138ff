//! Experiment runner for lattice Gaussian multiplicative chaos and its atomic
//! dual: configuration, deterministic seeding, result tables and manifests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipelines;
pub mod run;

pub use config::{validate_config, Experiment, ExperimentConfig, RawConfig};
pub use manifest::RunManifest;
pub use pipelines::{run_pipeline, Outcome};
pub use run::{run_experiment, RunError};
