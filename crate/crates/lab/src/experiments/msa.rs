use qelab_core::measure::{eigenvalue_separation, separation_survival};
use qelab_core::msa::{msa_run, regularity_probability, MsaConfig};
use qelab_core::rng::substream;
use qelab_core::stats::wilson;
use qelab_core::OperatorSpec;

use crate::artifact::{Assertion, Outcome, Table};
use crate::config::{ExperimentConfig, SeparationBlock};
use crate::error::Result;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    if cfg.msa.census {
        census(cfg, &mut out)?;
    }
    if let Some(s) = &cfg.msa.separation {
        separation(cfg, s, &mut out)?;
    }
    if cfg.msa.regularity.is_some() {
        regularity(cfg, &mut out)?;
    }
    Ok(out)
}

fn census(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let spec = cfg.spec()?;
    let omega = cfg.omega()?;
    let sched = cfg.schedule.resolve(spec.d + spec.nu)?;
    let b = &cfg.msa;
    let mut schedule = Table::new("msa_schedule", &["level", "scale", "requested_levels"]);
    for (k, &n) in sched.scales.iter().enumerate() {
        schedule.push(vec![k.into(), n.into(), sched.requested_levels.into()]);
    }
    let mut table = Table::new(
        "msa_census",
        &[
            "seed",
            "level",
            "scale",
            "trials",
            "good",
            "good_fraction",
            "good_ci_lo",
            "good_ci_hi",
            "singular",
            "gamma_mean",
            "gamma_sd",
            "gamma_degradation",
            "max_disjoint_bad",
        ],
    );
    // good fraction and mean rate per seed, per level
    let mut per_seed: Vec<Vec<(f64, f64)>> = Vec::new();
    for &seed in &cfg.seeds {
        let mcfg = MsaConfig {
            samples: b.samples,
            theta_grid: b.theta_grid,
            energy: b.energy,
            seed,
            per_scale: b.per_scale.clone(),
        };
        let runs = msa_run(&spec, &sched, &omega, &mcfg)?;
        let mut row = Vec::new();
        for (k, r) in runs.iter().enumerate() {
            let c = &r.census;
            table.push(vec![
                seed.into(),
                k.into(),
                c.scale.into(),
                c.trials.into(),
                c.good.into(),
                c.good_fraction.into(),
                c.good_ci.0.into(),
                c.good_ci.1.into(),
                c.singular.into(),
                c.gamma_mean.into(),
                c.gamma_sd.into(),
                c.gamma_degradation.into(),
                c.max_disjoint_bad.into(),
            ]);
            row.push((c.good_fraction, c.gamma_mean));
        }
        per_seed.push(row);
    }
    let levels = sched.scales.len();
    out.assertions.push(Assertion::soft(
        "schedule_fits_site_cap",
        !sched.truncated(),
        format!("{levels} of {} requested levels fit the site cap, scales {:?}", sched.requested_levels, sched.scales),
    ));
    let monotone = per_seed.iter().all(|r| r.windows(2).all(|w| w[1].0 >= w[0].0));
    out.assertions.push(Assertion::soft("good_fraction_monotone", monotone, "good fraction non-decreasing in scale for every seed"));
    if !b.reference_good.is_empty() {
        let mut pass = true;
        let mut detail = Vec::new();
        for k in 0..levels.min(b.reference_good.len()) {
            let worst = per_seed.iter().map(|r| r[k].0).fold(1.0f64, f64::min);
            let floor = b.reference_good[k] - b.good_tolerance;
            pass &= worst >= floor;
            detail.push(format!("N={}: min {worst:.4} vs floor {floor:.4}", sched.scales[k]));
        }
        out.assertions.push(Assertion::hard("good_fraction_vs_reference", pass, detail.join("; ")));
    }
    if !b.gamma_band.is_empty() {
        let mut pass = true;
        let mut detail = Vec::new();
        for k in 0..levels.min(b.gamma_band.len()) {
            let (lo, hi) = b.gamma_band[k];
            let gs: Vec<f64> = per_seed.iter().map(|r| r[k].1).collect();
            pass &= gs.iter().all(|g| (lo..=hi).contains(g));
            detail.push(format!("N={}: {gs:.4?} in [{lo:.4}, {hi:.4}]", sched.scales[k]));
        }
        out.assertions.push(Assertion::hard("gamma_in_band", pass, detail.join("; ")));
    }
    if cfg.seeds.len() > 1 {
        let mut pass = true;
        let mut detail = Vec::new();
        for k in 0..levels {
            let fs: Vec<f64> = per_seed.iter().map(|r| r[k].0).collect();
            let spread = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - fs.iter().copied().fold(f64::INFINITY, f64::min);
            pass &= spread <= 2.0 * b.good_tolerance;
            detail.push(format!("N={}: spread {spread:.4}", sched.scales[k]));
        }
        out.assertions.push(Assertion::hard("seed_stability", pass, detail.join("; ")));
    }
    out.tables.push(schedule);
    out.tables.push(table);
    Ok(())
}

fn separation(cfg: &ExperimentConfig, s: &SeparationBlock, out: &mut Outcome) -> Result<()> {
    let spec = cfg.spec()?;
    let mut table = Table::new(
        "separation",
        &["seed", "scale", "eps", "threshold", "trials", "violations", "probability", "ci_lo", "ci_hi"],
    );
    let mut decreasing = true;
    let mut detail = Vec::new();
    for &seed in &cfg.seeds {
        let mut prev: Option<f64> = None;
        for &l in &s.scales {
            let sum = eigenvalue_separation(&spec, l, 2 * l as i64 + 2, s.trials, s.beta, substream(seed, &[l as u64]))?;
            table.push(vec![
                seed.into(),
                l.into(),
                spec.eps.into(),
                sum.threshold.into(),
                sum.trials.into(),
                sum.violations.into(),
                sum.probability.into(),
                sum.ci.0.into(),
                sum.ci.1.into(),
            ]);
            if let Some(p) = prev {
                decreasing &= sum.probability < p;
            }
            prev = Some(sum.probability);
            detail.push(format!("L={l}: {:.4}", sum.probability));
        }
    }
    out.assertions.push(Assertion::hard("separation_decreasing_in_scale", decreasing, detail.join("; ")));

    if s.oracle {
        let bare = OperatorSpec { eps: 0.0, delta: 0.0, ..spec.clone() };
        let (lo, hi) = spec.disorder.support();
        let k = (2 * s.oracle_scale as u64 + 1).pow(spec.d as u32);
        let mut oracle = Table::new("separation_oracle", &["seed", "scale", "t", "empirical", "oracle", "ci_lo", "ci_hi"]);
        let mut pass = true;
        for &seed in &cfg.seeds {
            let l = s.oracle_scale;
            let sum = eigenvalue_separation(&bare, l, 2 * l as i64 + 2, s.trials, s.beta, substream(seed, &[0, l as u64]))?;
            for &t in &s.oracle_points {
                let p = 1.0 - separation_survival(k, t, hi - lo);
                let emp = sum.cdf(t);
                let hits = (emp * s.trials as f64).round() as usize;
                let (a, b) = wilson(hits, s.trials, 3.0);
                pass &= a <= p && p <= b;
                oracle.push(vec![seed.into(), l.into(), t.into(), emp.into(), p.into(), a.into(), b.into()]);
            }
        }
        out.assertions.push(Assertion::hard(
            "separation_uncoupled_oracle",
            pass,
            "empirical distribution of the minimum gap inside the 3-sigma Wilson interval of the order-statistics law",
        ));
        out.tables.push(oracle);
    }
    out.tables.push(table);
    Ok(())
}

fn regularity(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let spec = cfg.spec()?;
    let r = cfg.msa.regularity.as_ref().expect("regularity block");
    let mut table =
        Table::new("regularity", &["seed", "scale", "rate", "trials", "probability", "ci_lo", "ci_hi", "fitted_p"]);
    let mut worst = 1.0f64;
    for &seed in &cfg.seeds {
        let est = regularity_probability(&spec, r.scale, r.rate, &r.energies, r.tolerance, r.trials, seed)?;
        worst = worst.min(est.probability);
        table.push(vec![
            seed.into(),
            r.scale.into(),
            r.rate.into(),
            est.trials.into(),
            est.probability.into(),
            est.ci.0.into(),
            est.ci.1.into(),
            est.fitted_p.into(),
        ]);
    }
    out.assertions.push(Assertion::soft("regularity_high", worst >= 0.99, format!("lowest probability {worst:.4}")));
    out.tables.push(table);
    Ok(())
}
