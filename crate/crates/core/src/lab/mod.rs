//! Configuration, persistence and experiment orchestration.

pub mod config;
pub mod experiment;
pub mod fieldio;
pub mod manifest;
pub mod metrics;
pub mod perturbation;

pub use config::{Experiment, ExperimentConfig, PerturbationKind, CONFIG_KEYS};
pub use experiment::{execute, run_experiment, RunOutput};
pub use fieldio::{deserialize_field, serialize_field};
pub use manifest::RunManifest;
pub use metrics::emit_metrics;
