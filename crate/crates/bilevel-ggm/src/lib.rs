//! File formats, configuration, a thread-pool executor and the subcommands
//! behind the `bilevel-ggm` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;

pub use config::{RunConfig, SolverConfig};
pub use error::{CliError, CliResult};
pub use exec::PoolExecutor;
