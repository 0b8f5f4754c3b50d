//! Configuration, presets, file formats and the commands behind the
//! `ptkho` binary.

pub mod commands;
pub mod config;
pub mod fitspec;
pub mod format;

pub use commands::{cmd_analyze, cmd_evolve, cmd_sweep, summarize, CliError, SweepSummary};
pub use config::{parse_config, preset, ConfigError, ExperimentConfig, PRESET_NAMES};
pub use fitspec::{FitKind, FitSpec, FitSpecError};
pub use format::{fmt_num, parse_snapshot, parse_time_series, render_time_series, SchemaError};
