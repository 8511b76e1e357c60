//! Experiment driver for the `capsule-core` library: configs, runners and
//! tabular reports.

pub mod config;
pub mod experiments;
pub mod presets;
pub mod report;
pub mod values;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run, RunError};
pub use report::ResultRecord;
