//! Library side of the `harqir` command-line tool: configuration handling,
//! sweeps and output formats.

pub mod config;
pub mod emit;
pub mod error;
pub mod selftest;
pub mod sweep;

pub use config::{db_to_linear, linear_to_db, Config, FileConfig, SweepVar};
pub use emit::{emit, Format};
pub use error::{CliError, CliResult};
pub use sweep::{run_sweep, ResultRow, SweepConfig};
