//! Command-line experiment harness.
//!
//! Every subcommand resolves to an [`config::ExperimentConfig`] (from
//! `--config` JSON, command-line flags, or both with flags winning), runs
//! the experiment, and leaves a CSV table, optional plot matrices and a
//! checksummed `manifest.json` in the output directory. Runs are
//! deterministic in (config, seed): grid points derive their seeds by
//! hashing, so thread scheduling never changes results.

pub mod config;
pub mod experiments;
pub mod output;

/// Error classified by exit code: 1 for configuration problems, 2 for
/// numerical/runtime failures.
#[derive(Debug)]
pub enum RunError {
    Invalid(anyhow::Error),
    Numerical(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 1,
            RunError::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Invalid(e) => format!("invalid configuration: {e:#}"),
            RunError::Numerical(e) => format!("numerical failure: {e:#}"),
        }
    }
}

pub(crate) fn invalid(e: anyhow::Error) -> RunError {
    RunError::Invalid(e)
}

pub(crate) fn numerical(e: anyhow::Error) -> RunError {
    RunError::Numerical(e)
}

/// Resolve the thread count: explicit flag, then config, then the
/// `STOQEASE_THREADS` environment variable, then rayon's default.
pub fn resolve_threads(flag: Option<usize>, from_config: Option<usize>) -> Option<usize> {
    flag.or(from_config).or_else(|| {
        std::env::var("STOQEASE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}
