//! Sweep harness and command-line front end for `floquet-ratchet`.
//!
//! Parsers for configuration files and grid specifications live here so
//! that the binary, the tests and the fuzz targets share them.

pub mod app;
pub mod config;
pub mod grid;
pub mod output;
pub mod record;
pub mod sweep;

pub use app::{run, CliError, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
pub use config::{parse_config, Config, ConfigError};
pub use grid::{GridError, GridSpec};
pub use record::{record_key, ResultKind, ScanRecord};
pub use sweep::{evaluate, resolve_workers, run_sweep, Duration, Job, WORKERS_ENV};
