//! Command-line front end for `ofdmest-core`: config parsing, sweep CSV
//! output, SVG charts and the self-check suite.

pub mod commands;
pub mod config;
pub mod csv;
pub mod svg;
pub mod validate;

pub use commands::{cmd_singvals, cmd_sweep, cmd_validate, run_sweep, CliError, ExitCode};
pub use config::{parse_config, ConfigError, Metric, RunConfig, SnrGrid};
