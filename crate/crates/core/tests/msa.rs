use qelab_core::greens::{classify_operator, Thresholds, Verdict};
use qelab_core::lattice::make_box;
use qelab_core::linalg::dist_to_spectrum;
use qelab_core::msa::*;
use qelab_core::{assemble, Disorder, Error, FrequencyVector, Model, OperatorSpec, SitePoint};

fn small_config(seed: u64) -> MsaConfig {
    MsaConfig { samples: 3, theta_grid: 16, energy: 0.3, seed, per_scale: Vec::new() }
}

#[test]
fn schedule_is_strictly_increasing() {
    for (n0, c, mode) in [(3, 2.0, ScheduleMode::Paper), (4, 1.5, ScheduleMode::Vdk), (2, 3.0, ScheduleMode::Paper)] {
        let s = schedule_from(n0, c, mode, 4, 2, 0.5, 1.0).unwrap();
        assert!(s.scales.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.scales[0], n0);
        assert_eq!(s, schedule_from(n0, c, mode, 4, 2, 0.5, 1.0).unwrap());
    }
    let s = schedule(0.01, 3.0, 0.5, 2.0, 2, ScheduleMode::Paper, 1, 1.0).unwrap();
    assert_eq!(s.scales, vec![13, 170]);
}

#[test]
fn diagonal_case_good_iff_far_from_diagonal() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
    let sched = schedule_from(4, 2.0, ScheduleMode::Paper, 1, 2, 0.5, 1.0).unwrap();
    let omega = FrequencyVector::golden();
    let cfg = small_config(5);
    let runs = msa_run(&spec, &sched, &omega, &cfg).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 4);
    let cut = 2.0 * (-(4f64).powf(0.5)).exp();
    for r in &runs[0].records {
        let sample = census_sample(&spec, Disorder::default(), cfg.seed, r.sample, 4).unwrap();
        let h = assemble(&spec, &region, &sample, &omega, r.theta).unwrap();
        let mut diag = h.diag.clone();
        diag.sort_by(f64::total_cmp);
        if dist_to_spectrum(&diag, cfg.energy) >= cut {
            assert_eq!(r.verdict, Verdict::Good);
        }
    }
}

#[test]
fn undriven_run_matches_reference_path() {
    let spec = OperatorSpec::new(1, 1, 0.05, 0.0, 1.0, Model::Schrodinger).unwrap();
    let sched = schedule_from(5, 2.0, ScheduleMode::Paper, 1, 2, 0.6, 0.5).unwrap();
    let omega = FrequencyVector::golden();
    let cfg = small_config(11);
    let runs = msa_run(&spec, &sched, &omega, &cfg).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 5);
    let th = Thresholds::new(5.0, 0.5, 0.6).unwrap();
    for r in &runs[0].records {
        let sample = census_sample(&spec, Disorder::default(), cfg.seed, r.sample, 5).unwrap();
        let h = assemble(&spec, &region, &sample, &omega, r.theta).unwrap();
        let rep = classify_operator(&h, cfg.energy, &th).unwrap();
        assert_eq!(rep.verdict, r.verdict);
        assert_eq!(rep.op_norm.to_bits(), r.op_norm.to_bits());
        assert_eq!(rep.gamma_fit.to_bits(), r.gamma_fit.to_bits());
    }
    assert_eq!(runs, msa_run(&spec, &sched, &omega, &cfg).unwrap());
}

#[test]
fn two_level_run_reports_each_scale() {
    let spec = OperatorSpec::new(1, 1, 0.01, 0.01, 1.0, Model::Schrodinger).unwrap();
    let sched = schedule_from(3, 2.0, ScheduleMode::Paper, 2, 2, 0.9, 1.0).unwrap();
    let cfg = MsaConfig { samples: 2, theta_grid: 4, energy: 0.3, seed: 1, per_scale: vec![(4, 8)] };
    let runs = msa_run(&spec, &sched, &FrequencyVector::golden(), &cfg).unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0].census.trials, 32);
    assert_eq!(runs[1].census.trials, 8);
    for r in &runs {
        assert!((0.0..=1.0).contains(&r.census.good_fraction));
    }
    assert!(runs[0].records.iter().all(|r| r.disjoint_bad == 0));
}

fn two_box_regular(tol: f64, k: i32) -> f64 {
    let q = (1.0 - tol).powi(k);
    1.0 - (1.0 - q).powi(2)
}

#[test]
fn regularity_without_hopping_matches_closed_form() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
    let (tol, trials) = (0.1, 4000);
    let est = regularity_probability(&spec, 2, 1.0, &[0.1], tol, trials, 21).unwrap();
    // |v - E| < tol has probability tol for v uniform on [-1, 1].
    let p = two_box_regular(tol, 5);
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((est.probability - p).abs() <= 4.0 * sd, "{} {p}", est.probability);
}

#[test]
fn regularity_strong_disorder() {
    let spec = OperatorSpec::new(1, 1, 0.01, 0.0, 1.0, Model::Schrodinger).unwrap();
    let est = regularity_probability(&spec, 6, 0.5, &[0.0], 1e-6, 2000, 4).unwrap();
    assert!(est.probability >= 0.99, "{}", est.probability);
    assert!(matches!(regularity_probability(&spec, 6, 1.0, &[0.0], 1e-6, 0, 4), Err(Error::InvalidParameter { .. })));
}

#[test]
fn double_resonance_independent_without_hopping() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
    let th = Thresholds::new(3.0, 1.0, 0.5).unwrap();
    let r = double_resonance_probe(&spec, &FrequencyVector::golden(), 3, 9, 0.5, &th, 0.2, 1000, 8).unwrap();
    assert!(r.resonant > 0 && r.bad > 0);
    assert!((r.joint_frequency - r.product).abs() <= 4.0 * r.product_se.max(1.0 / 1000.0));
    assert!(double_resonance_probe(&spec, &FrequencyVector::golden(), 9, 3, 0.5, &th, 0.2, 10, 8).is_err());
}
