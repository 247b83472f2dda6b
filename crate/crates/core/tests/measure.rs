use proptest::prelude::*;
use qelab_core::lattice::make_box;
use qelab_core::measure::*;
use qelab_core::{Disorder, DisorderSample, Error, FrequencyVector, Model, OperatorSpec, Region, SitePoint};

fn schrodinger(eps: f64, delta: f64) -> OperatorSpec {
    OperatorSpec::new(1, 1, eps, delta, 1.0, Model::Schrodinger).unwrap()
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `P(min |a_i - b_k| > t)` for two independent sets of `k` iid uniform
/// points on an interval of length `len`.
fn separation_survival(k: u64, t: f64, len: f64) -> f64 {
    let total = binom(2 * k, k);
    let mut p = 0.0;
    for runs in 2..=2 * k {
        let h = runs / 2;
        let weight = if runs % 2 == 0 {
            2.0 * binom(k - 1, h - 1).powi(2)
        } else {
            2.0 * binom(k - 1, h) * binom(k - 1, h - 1)
        } / total;
        let free = (1.0 - (runs - 1) as f64 * t / len).max(0.0);
        p += weight * free.powi(2 * k as i32);
    }
    p
}

#[test]
fn separation_survival_oracle_sums_to_one() {
    assert!((separation_survival(5, 0.0, 2.0) - 1.0).abs() < 1e-12);
    // One point each: P(|a - b| > t) = (1 - t/len)^2.
    assert!((separation_survival(1, 0.5, 2.0) - 0.5625).abs() < 1e-12);
}

#[test]
fn wegner_theta_diagonal_oracle() {
    let spec = schrodinger(0.0, 0.0);
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let sample = DisorderSample::cube(Disorder::default(), 1, 2, 11).unwrap();
    let omega = FrequencyVector::golden();
    let (energy, kappa) = (0.4, 0.01);
    let est = wegner_theta(&spec, &region, &sample, &omega, energy, kappa, (0.0, 1.0)).unwrap();
    // Independent union: theta is bad iff |n w + theta + v_j - E| <= kappa for some site.
    let grid = 2_000_000;
    let hits = (0..grid)
        .filter(|&i| {
            let th = (i as f64 + 0.5) / grid as f64;
            region.sites().any(|s| (omega.dot(&s[1..]) + th + sample.value(&s[..1]).unwrap() - energy).abs() <= kappa)
        })
        .count();
    let oracle = hits as f64 / grid as f64;
    assert!((est.value - oracle).abs() < 2.0 * region.len() as f64 / grid as f64);
    assert!(est.value <= 2.0 * kappa * region.len() as f64 + 1e-15);
    assert!(est.pass);
}

#[test]
fn wegner_theta_coupled_matches_sampled_theta() {
    let spec = schrodinger(0.1, 0.05);
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let sample = DisorderSample::cube(Disorder::default(), 1, 2, 5).unwrap();
    let omega = FrequencyVector::golden();
    let (energy, kappa) = (0.1, 0.02);
    let est = wegner_theta(&spec, &region, &sample, &omega, energy, kappa, (0.0, 1.0)).unwrap();
    let grid = 4000;
    let mut hits = 0;
    for i in 0..grid {
        let th = (i as f64 + 0.5) / grid as f64;
        let h = qelab_core::assemble(&spec, &region, &sample, &omega, th).unwrap();
        let eig = qelab_core::linalg::eigenvalues(&h).unwrap();
        if eig.iter().any(|l| (l - energy).abs() <= kappa) {
            hits += 1;
        }
    }
    let oracle = hits as f64 / grid as f64;
    assert!((est.value - oracle).abs() <= 2.0 * region.len() as f64 / grid as f64, "{} {}", est.value, oracle);
}

#[test]
fn wegner_theta_rejects_wave_model() {
    let spec = OperatorSpec::new(1, 1, 0.1, 0.0, 1.0, Model::Wave).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 1);
    let sample = DisorderSample::cube(Disorder::default(), 1, 1, 0).unwrap();
    let r = wegner_theta(&spec, &region, &sample, &FrequencyVector::golden(), 0.0, 0.1, (0.0, 1.0));
    assert!(matches!(r, Err(Error::WaveModelRejected)));
}

#[test]
fn wegner_x_single_site() {
    let spec = schrodinger(0.0, 0.0);
    let region = Region::subset(1, 1, vec![vec![0, 0]]).unwrap();
    let kappa = 0.05;
    let est = wegner_x(&spec, &region, &FrequencyVector::golden(), 0.3, 0.2, kappa, 20_000, 3).unwrap();
    // v uniform on [-1, 1]: P(|0.3 + v - 0.2| <= kappa) = kappa.
    let sd = (kappa * (1.0 - kappa) / 20_000.0).sqrt();
    assert!((est.value - kappa).abs() <= 4.0 * sd, "{}", est.value);
    assert!(est.reliable);
}

#[test]
fn wegner_x_zero_kappa() {
    let spec = schrodinger(0.1, 0.0);
    let region = make_box(&SitePoint::origin(1, 1), 1);
    let est = wegner_x(&spec, &region, &FrequencyVector::golden(), 0.0, 0.0, 0.0, 50, 1).unwrap();
    assert_eq!(est.value, 0.0);
}

#[test]
fn min_gap_examples() {
    assert_eq!(min_gap(&[0.0, 1.0], &[0.4, 2.5]), 0.4);
    assert_eq!(min_gap(&[], &[1.0]), f64::INFINITY);
}

#[test]
fn separation_distribution_without_hopping() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
    let trials = 20_000;
    let s = eigenvalue_separation(&spec, 2, 10, trials, 0.5, 17).unwrap();
    for t in [0.005, 0.02, 0.05, 0.1] {
        let p = 1.0 - separation_survival(5, t, 2.0);
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((s.cdf(t) - p).abs() <= 4.0 * sd + 1e-4, "t={t}: {} vs {p}", s.cdf(t));
    }
}

#[test]
fn separation_rejects_overlap() {
    let spec = schrodinger(0.1, 0.0);
    assert!(matches!(eigenvalue_separation(&spec, 3, 6, 10, 0.5, 0), Err(Error::OverlappingBoxes)));
}

#[test]
fn power_law_exponent() {
    let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-2.0))).collect();
    assert!((fit_scale_exponent(&pts).unwrap() - 2.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counting_function_shift(seed in 0u64..1000, theta in 0.0f64..1.0, energy in -1.5f64..1.5, kappa in 0.0f64..0.3) {
        let spec = schrodinger(0.1, 0.05);
        let region = make_box(&SitePoint::origin(1, 1), 2);
        let sample = DisorderSample::cube(Disorder::default(), 1, 2, seed).unwrap();
        let diff = counting_shift_check(&spec, &region, &sample, &FrequencyVector::golden(), theta, energy, kappa).unwrap();
        prop_assert!(diff <= 1);
    }

    #[test]
    fn wegner_theta_within_linear_bound(seed in 0u64..1000, energy in -1.0f64..1.0, kappa in 1e-4f64..0.05) {
        let spec = schrodinger(0.05, 0.02);
        let region = make_box(&SitePoint::origin(1, 1), 1);
        let sample = DisorderSample::cube(Disorder::default(), 1, 1, seed).unwrap();
        let est = wegner_theta(&spec, &region, &sample, &FrequencyVector::golden(), energy, kappa, (0.0, 1.0)).unwrap();
        prop_assert!(est.value <= 2.0 * kappa * region.len() as f64 + 1e-12);
    }
}
