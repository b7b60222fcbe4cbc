//! Config-driven experiment runner for `diskqm`.

pub mod config;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, SCHEMA_VERSION};
pub use runner::{run, Failure, Manifest};
