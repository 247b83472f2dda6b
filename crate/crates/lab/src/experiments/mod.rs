//! One module per experiment kind. Each loops over the master seeds and
//! returns tables plus assertions; nothing here touches the filesystem.

mod dynamics;
mod exclusion;
mod identities;
mod localization;
mod msa;
mod wegner;

use crate::artifact::{Assertion, Outcome};
use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.kind {
        Kind::Identities => identities::run(cfg),
        Kind::Wegner => wegner::run(cfg),
        Kind::Exclusion => exclusion::run(cfg),
        Kind::Msa => msa::run(cfg),
        Kind::Dynamics => dynamics::run(cfg),
        Kind::Localization => localization::run(cfg),
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Hard assertion that every value is at most `limit`.
fn at_most(name: &str, values: &[f64], limit: f64) -> Assertion {
    let worst = max_of(values.iter().copied());
    let pass = !values.is_empty() && values.iter().all(|&v| v <= limit);
    Assertion::hard(name, pass, format!("max {worst:.4e} over {} values, limit {limit:e}", values.len()))
}
