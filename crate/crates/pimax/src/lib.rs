//! Experiment harness for predictive-information-driven robot chains:
//! configuration, the control loop, run logs and behavior metrics.

pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod runlog;

pub use config::{Control, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use harness::{run_composition, run_experiment, run_fixed_policy, run_loop, RunOutput};
pub use runlog::RunLog;
