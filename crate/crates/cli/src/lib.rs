//! Command-line front end for the gating simulator.
//!
//! The binary wires five commands around the library: trace generation,
//! owner enrollment, single-policy simulation, baseline-vs-adaptive
//! comparison, and report evaluation. Configuration comes from built-in
//! defaults, an optional JSON file, and command-line overrides, in that
//! order.

pub mod commands;
pub mod config;

pub use commands::{cmd_compare, cmd_enroll, cmd_eval, cmd_gen_trace, cmd_run, CliError};
pub use config::{load_config, ConfigOverrides, RunConfig};
