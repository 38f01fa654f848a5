//! Configuration-driven runner for the `srmt` binary.

pub mod compare;
pub mod config;
pub mod error;
pub mod manifest;
pub mod runner;
pub mod svg;

pub use compare::{compare_report, ComparisonReport, ToleranceSpec};
pub use config::{parse_config, resolve, Experiment, Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use runner::{run, Gate, RunOutcome};
