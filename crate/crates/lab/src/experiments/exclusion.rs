use qelab_core::frequency::{
    census_with_spectra, melnikov_pair_constraints, pair_acceptance, pair_threshold, qmc_measure, spatial_block_spectrum,
    window_spectra, Constraint, QmcConfig, WindowSpectra,
};
use qelab_core::operators::phase_term;
use qelab_core::rng::{substream, trial_rng};
use qelab_core::{DisorderSample, Model};
use rand::Rng;

use super::at_most;
use crate::artifact::{Assertion, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::error::Result;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let omega = cfg.omega()?;
    let b = &cfg.exclusion;
    let sigma = cfg.schedule.sigma;
    let d = spec.d;

    let mut sets = Table::new(
        "exclusion_sets",
        &["seed", "set", "constraints", "interval_union", "qmc", "qmc_ci", "deviation", "within_ci"],
    );
    let r = b.set_radius as i64;
    let mut lo = vec![-r; d];
    let mut hi = vec![r; d];
    hi[0] = 3 * r + 2;
    lo[0] = -r;
    let mut far = vec![0i64; d];
    far[0] = 2 * r + 2;
    for &seed in &cfg.seeds {
        for s in 0..b.sets {
            let sample = DisorderSample::draw(spec.disorder, lo.clone(), hi.clone(), substream(seed, &[s as u64]))?;
            let spectra = vec![
                spatial_block_spectrum(&spec, &sample, &vec![0; d], b.set_radius)?,
                spatial_block_spectrum(&spec, &sample, &far, b.set_radius)?,
            ];
            let qmc = QmcConfig { points: b.qmc_points, replicates: b.qmc_replicates, seed: substream(seed, &[s as u64, 7]) };
            let exact = melnikov_pair_constraints(&spectra, b.set_n, b.set_n0, sigma, 1, &qmc);
            let pairs: Vec<_> = exact
                .constraints
                .iter()
                .filter_map(|c| match c {
                    Constraint::Pair(p) => Some(p.clone()),
                    Constraint::Triple(_) => None,
                })
                .collect();
            let (value, ci) = qmc_measure(1, &qmc, |w| pairs.iter().any(|p| p.contains(w)));
            let dev = (value - exact.excluded_measure).abs();
            sets.push(vec![
                seed.into(),
                s.into(),
                pairs.len().into(),
                exact.excluded_measure.into(),
                value.into(),
                ci.into(),
                dev.into(),
                (dev <= ci).into(),
            ]);
        }
    }
    let within: Vec<f64> = sets.floats("within_ci");
    let inside = within.iter().filter(|&&x| x == 1.0).count();
    let mut assertions = vec![Assertion::hard(
        "qmc_matches_interval_union",
        inside == within.len(),
        format!("{inside} of {} sets within the reported interval", within.len()),
    )];

    let mut census = Table::new(
        "exclusion_census",
        &["seed", "sample", "model", "trial", "planted", "theta", "energy", "bad_boxes", "max_disjoint", "exact"],
    );
    let mut accepted_any = true;
    for &seed in &cfg.seeds {
        let mut found: Option<(usize, WindowSpectra)> = None;
        for c in 0..b.census_candidates {
            let sample = DisorderSample::cube(spec.disorder, d, b.census_n as i64, substream(seed, &[c as u64, 11]))?;
            let w = window_spectra(&spec, &sample, b.census_n0, b.census_n)?;
            if pair_acceptance(&w, &omega, b.census_n, sigma).accepted {
                found = Some((c, w));
                break;
            }
        }
        let Some((c, windows)) = found else {
            accepted_any = false;
            continue;
        };
        let models: &[Model] = if b.wave { &[Model::Schrodinger, Model::Wave] } else { &[Model::Schrodinger] };
        let reach = b.census_n as i64;
        for t in 0..b.census_trials {
            let mut rng = trial_rng(seed, &[t as u64, 13]);
            let theta: f64 = rng.random();
            let planted = t % 2 == 1;
            let uniform: f64 = rng.random_range(-1.0..1.0);
            let w = rng.random_range(0..windows.spectra.len());
            let mu = windows.spectra[w][rng.random_range(0..windows.spectra[w].len())];
            let n: Vec<i64> = (0..omega.nu()).map(|_| rng.random_range(-reach..=reach)).collect();
            let offset = rng.random_range(-0.5..0.5) * pair_threshold(b.census_n0, sigma) / 2.0;
            for &model in models {
                let energy = if planted { phase_term(model, &omega, &n, theta) + mu + offset } else { uniform };
                let cen = census_with_spectra(model, &windows, &omega, theta, energy, b.census_n, sigma);
                census.push(vec![
                    seed.into(),
                    c.into(),
                    (if model == Model::Wave { "wave" } else { "schrodinger" }).into(),
                    t.into(),
                    planted.into(),
                    theta.into(),
                    energy.into(),
                    cen.bad.len().into(),
                    cen.max_disjoint.into(),
                    cen.exact.into(),
                ]);
            }
        }
    }
    assertions.push(Assertion::hard(
        "accepted_sample_found",
        accepted_any,
        format!("searched {} disorder samples per seed", b.census_candidates),
    ));
    let model_col = census.column("model").expect("model column");
    let counts = census.floats("max_disjoint");
    let pick = |name: &str| -> Vec<f64> {
        (0..census.rows.len()).filter(|&i| census.rows[i][model_col].to_string() == name).map(|i| counts[i]).collect()
    };
    assertions.push(at_most("census_schrodinger_at_most_one", &pick("schrodinger"), 1.0));
    if b.wave {
        assertions.push(at_most("census_wave_at_most_two", &pick("wave"), 2.0));
    }
    let planted = census.floats("planted");
    let missed = (0..counts.len()).filter(|&i| planted[i] == 1.0 && counts[i] < 1.0).count();
    assertions.push(Assertion::hard(
        "census_planted_detected",
        missed == 0 && planted.contains(&1.0),
        format!("{missed} planted trials without a bad box"),
    ));
    let exact = census.floats("exact");
    assertions.push(Assertion::soft(
        "census_search_exact",
        exact.iter().all(|&x| x == 1.0),
        "branch and bound finished within its budget on every trial",
    ));
    Ok(Outcome { tables: vec![sets, census], assertions })
}
