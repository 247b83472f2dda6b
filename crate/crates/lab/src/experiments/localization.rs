use qelab_core::lattice::make_box;
use qelab_core::spectral::{localization_pairs, summarize_localization};
use qelab_core::SitePoint;

use crate::artifact::{Assertion, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::error::Result;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let omega = cfg.omega()?;
    let b = &cfg.localization;
    let region = make_box(&SitePoint::origin(spec.d, spec.nu), b.radius);
    let mut table = Table::new(
        "localization",
        &["seed", "sites", "samples", "pairs", "localized", "fraction", "mean_rate", "mean_participation"],
    );
    let mut pairs = Table::new(
        "localization_pairs",
        &["seed", "sample", "value", "loc_center", "decay_rate", "participation"],
    );
    let mut worst = 1.0f64;
    for &seed in &cfg.seeds {
        let records = localization_pairs(&spec, b.samples, &region, &omega, b.theta, b.window, seed)?;
        for r in &records {
            let center: Vec<String> = r.loc_center.j.iter().chain(&r.loc_center.n).map(|x| x.to_string()).collect();
            pairs.push(vec![
                seed.into(),
                r.sample.into(),
                r.value.into(),
                center.join(" ").into(),
                r.decay_rate.into(),
                r.participation.into(),
            ]);
        }
        let s = summarize_localization(&records, b.samples, b.gamma_min, b.pr_threshold);
        worst = worst.min(s.fraction);
        table.push(vec![
            seed.into(),
            region.len().into(),
            s.samples.into(),
            s.pairs.into(),
            s.localized.into(),
            s.fraction.into(),
            s.mean_rate.into(),
            s.mean_participation.into(),
        ]);
    }
    let assertions = match b.min_fraction {
        Some(min) => vec![Assertion::hard(
            "localized_fraction",
            worst >= min,
            format!("lowest fraction {worst:.4}, required {min}"),
        )],
        None => vec![Assertion::soft("localized_fraction", true, format!("lowest fraction {worst:.4}, reported only"))],
    };
    Ok(Outcome { tables: vec![table, pairs], assertions })
}
