use qelab_core::lattice::make_box;
use qelab_core::measure::{wegner_theta, wegner_x, WEGNER_THETA_C, WEGNER_X_C};
use qelab_core::rng::substream;
use qelab_core::stats::wilson;
use qelab_core::{assemble, DisorderSample, OperatorSpec, Region, SitePoint};

use super::at_most;
use crate::artifact::{Assertion, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::error::Result;

/// Length of the union of `[c - kappa, c + kappa]` inside `[0, 1]`, merged
/// by a plain sort and sweep.
fn union_in_unit(centres: &[f64], kappa: f64) -> f64 {
    let mut ivs: Vec<(f64, f64)> =
        centres.iter().map(|&c| ((c - kappa).max(0.0), (c + kappa).min(1.0))).filter(|(a, b)| a < b).collect();
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in ivs {
        cur = match cur {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    total + cur.map_or(0.0, |(s, e)| e - s)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let omega = cfg.omega()?;
    let b = &cfg.wegner;
    let region = make_box(&SitePoint::origin(spec.d, spec.nu), b.radius);
    let sites = region.len();
    let bare = OperatorSpec { eps: 0.0, delta: 0.0, ..spec.clone() };

    let mut per_sample = Table::new(
        "wegner_theta_samples",
        &["seed", "sample", "kappa", "sites", "measure", "bound", "uncoupled_measure", "oracle", "oracle_deviation"],
    );
    for &seed in &cfg.seeds {
        for s in 0..b.samples {
            let sample = DisorderSample::cube(spec.disorder, spec.d, b.radius as i64, substream(seed, &[s as u64]))?;
            // At eps = delta = 0 the bad set is the union of theta-intervals
            // around E - (n.omega + v_j), read off the diagonal at theta = 0.
            let diag0 = assemble(&bare, &region, &sample, &omega, 0.0)?.diag;
            let centres: Vec<f64> = diag0.iter().map(|d| b.energy - d).collect();
            for &kappa in &b.kappas {
                let est = wegner_theta(&spec, &region, &sample, &omega, b.energy, kappa, (0.0, 1.0))?;
                let bare_est = wegner_theta(&bare, &region, &sample, &omega, b.energy, kappa, (0.0, 1.0))?;
                let oracle = union_in_unit(&centres, kappa);
                per_sample.push(vec![
                    seed.into(),
                    s.into(),
                    kappa.into(),
                    sites.into(),
                    est.value.into(),
                    est.bound.into(),
                    bare_est.value.into(),
                    oracle.into(),
                    (bare_est.value - oracle).abs().into(),
                ]);
            }
        }
    }

    let mut ledger =
        Table::new("wegner_theta", &["kappa", "sites", "samples", "max_measure", "mean_measure", "bound", "max_oracle_deviation"]);
    let kappas = per_sample.floats("kappa");
    let measures = per_sample.floats("measure");
    let devs = per_sample.floats("oracle_deviation");
    let mut ratios = Vec::new();
    let mut all_devs = Vec::new();
    for &kappa in &b.kappas {
        let idx: Vec<usize> = (0..kappas.len()).filter(|&i| kappas[i] == kappa).collect();
        let ms: Vec<f64> = idx.iter().map(|&i| measures[i]).collect();
        let bound = WEGNER_THETA_C * kappa * sites as f64;
        let max_dev = idx.iter().map(|&i| devs[i]).fold(0.0f64, f64::max);
        ledger.push(vec![
            kappa.into(),
            sites.into(),
            idx.len().into(),
            ms.iter().copied().fold(0.0f64, f64::max).into(),
            (ms.iter().sum::<f64>() / ms.len() as f64).into(),
            bound.into(),
            max_dev.into(),
        ]);
        ratios.extend(ms.iter().map(|m| m / bound));
        all_devs.push(max_dev);
    }
    let mut assertions = vec![
        at_most("wegner_theta_bound", &ratios, 1.0),
        at_most("wegner_theta_uncoupled_oracle", &all_devs, 1e-6),
    ];
    assertions[0].detail = format!("largest measure / (2 kappa |Lambda|) = {:.4}", ratios.iter().copied().fold(0.0f64, f64::max));

    let mut x_table = Table::new(
        "wegner_x",
        &["seed", "kappa", "sites", "trials", "estimate", "ci_lo", "ci_hi", "analytic", "bound"],
    );
    let single = Region::subset(spec.d, spec.nu, vec![vec![0; spec.d + spec.nu]])?;
    let general = make_box(&SitePoint::origin(spec.d, spec.nu), b.x_radius);
    let (lo, hi) = spec.disorder.support();
    let density = spec.disorder.density_sup();
    let mut single_ok = true;
    let mut general_ok = true;
    let mut worst_single = String::new();
    for &seed in &cfg.seeds {
        for (k, &kappa) in b.kappas.iter().enumerate() {
            for (tag, region) in [(0u64, &single), (1, &general)] {
                let est = wegner_x(&spec, region, &omega, 0.0, b.energy, kappa, b.x_trials, substream(seed, &[100 + k as u64, tag]))?;
                let hits = (est.value * b.x_trials as f64).round() as usize;
                let (ci_lo, ci_hi) = wilson(hits, b.x_trials, b.z);
                let bound = WEGNER_X_C * kappa * region.len() as f64 * density;
                let analytic = if tag == 0 {
                    // The single diagonal entry is theta + v at n = 0.
                    ((b.energy + kappa).min(hi) - (b.energy - kappa).max(lo)).max(0.0) * density
                } else {
                    f64::NAN
                };
                if tag == 0 && !(ci_lo <= analytic && analytic <= ci_hi) {
                    single_ok = false;
                    worst_single = format!("kappa {kappa:e}: {} outside [{ci_lo:e}, {ci_hi:e}] for {analytic:e}", est.value);
                }
                if tag == 1 && est.value > bound {
                    general_ok = false;
                }
                x_table.push(vec![
                    seed.into(),
                    kappa.into(),
                    region.len().into(),
                    b.x_trials.into(),
                    est.value.into(),
                    ci_lo.into(),
                    ci_hi.into(),
                    analytic.into(),
                    bound.into(),
                ]);
            }
        }
    }
    assertions.push(Assertion::hard(
        "wegner_x_single_site",
        single_ok,
        if single_ok { format!("analytic value inside the z = {} interval for every kappa", b.z) } else { worst_single },
    ));
    assertions.push(Assertion::hard("wegner_x_bound", general_ok, format!("estimate <= 4 kappa |Lambda| ||g||_inf on {} sites", general.len())));
    Ok(Outcome { tables: vec![ledger, per_sample, x_table], assertions })
}
