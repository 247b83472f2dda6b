//! Experiment runner for `qelab-core`: configs, seeded runs, CSV/JSON
//! artifacts and replay.

// `!(x > 0.0)` rejects NaN in config checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod config;
pub mod error;
pub mod experiments;
pub mod replay;

use std::path::Path;

pub use artifact::{Assertion, Manifest, Outcome, Table};
pub use config::{ExperimentConfig, Kind};
pub use error::{LabError, Result};
pub use replay::ReplayReport;

/// Runs `f` on a pool of `workers` threads. Results never depend on the
/// count: parallel maps collect in index order and reduce sequentially.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Executes the experiment and writes its artifacts into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path, workers: usize) -> Result<(Outcome, Manifest)> {
    let outcome = with_workers(workers, || experiments::execute(cfg))??;
    let manifest = artifact::write_run(dir, cfg, &outcome)?;
    Ok((outcome, manifest))
}

pub fn replay(dir: &Path, workers: usize) -> Result<ReplayReport> {
    with_workers(workers, || replay::replay(dir))?
}
