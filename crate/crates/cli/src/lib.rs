//! Command-line front end: configuration, subcommands and output writers.
//!
//! Energies are in `ħc / L` where `L` is the length unit named in the
//! `[output]` section; geometry is read in that unit.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

/// Build version in `git describe` form.
pub const VERSION: &str = env!("CASIMIR_VERSION");

/// Environment variable overriding the worker count.
pub const THREADS_VAR: &str = "CASIMIR_THREADS";

/// Sizes the global worker pool from [`THREADS_VAR`] when it is set.
pub fn init_threads() -> anyhow::Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow::anyhow!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(Some(n))
}
