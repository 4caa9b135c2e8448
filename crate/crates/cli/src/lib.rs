//! Scenario files, checkpoints, CSV outputs and scenario execution for the
//! `perovsim` command-line tool.

pub mod checkpoint;
pub mod config;
pub mod output;
pub mod run;

pub use config::{bundled, parse_config, ConfigError, ScenarioKind, ScenarioSpec};
pub use run::{run_scenario, Mode, Outcome, RunError};
