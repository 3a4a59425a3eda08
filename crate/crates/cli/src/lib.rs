//! Configuration, execution and report output for the `binomcat` runner.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Report, RunError, RunOptions, RunOutput};
