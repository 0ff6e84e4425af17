//! Library half of the `ehdist` command-line tool: configuration handling and
//! the subcommands, usable in-process by tests and scripts.

pub mod commands;
pub mod config;
pub mod verify;

pub use commands::{cmd_bounds, cmd_dp, cmd_simulate, cmd_sweep, sweep_points, CliError, CliResult, SweepPoint};
pub use config::{ArrivalSpec, ConfigError, ExperimentConfig, PolicyKind};
pub use verify::{cmd_verify, run_suites, SuiteReport};
