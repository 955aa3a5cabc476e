//! Batch experiment runner over `ehpc-core`.
//!
//! Each `run_*` function reads an [`ExperimentConfig`], writes CSV and JSON
//! files into an [`OutputDir`] and returns a report whose `violations` list
//! the checked invariants that failed.

pub mod compare;
pub mod config;
pub mod convergence;
pub mod error;
pub mod offline;
pub mod online;
pub mod output;
pub mod overflow;

pub use compare::{run_compare, CompareReport};
pub use config::{ExperimentConfig, OracleChoice, PolicyChoice, Scale};
pub use convergence::{run_convergence, ConvergenceReport};
pub use error::CliError;
pub use offline::{run_offline, OfflineReport};
pub use online::{run_online, OnlineReport};
pub use output::{OutputDir, SCHEMA_VERSION};
pub use overflow::{run_overflow, OverflowReport};

/// Sizes the global rayon pool from `EHPC_THREADS` when it is set.
pub fn configure_threads(var: Option<&str>) -> Result<(), CliError> {
    let Some(raw) = var else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("EHPC_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}
