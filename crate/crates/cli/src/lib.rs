//! Command-line front end for `tonguelock_core`: configuration parsing and
//! subcommand dispatch. The binary in `main.rs` only maps flags onto config
//! overrides.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig, Subcommand, KEYS};
pub use run::{execute, run, RunError};
