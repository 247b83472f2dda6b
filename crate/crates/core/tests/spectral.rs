use proptest::prelude::*;
use qelab_core::lattice::make_box;
use qelab_core::spectral::*;
use qelab_core::{
    assemble, Disorder, DisorderSample, Error, FrequencyVector, HamiltonianMatrix, Model, OperatorSpec, Region,
    SitePoint,
};

fn line(r: i64) -> Region {
    Region::subset(1, 1, (-r..=r).map(|j| vec![j, 0]).collect()).unwrap()
}

fn pair_on(region: &Region, vector: Vec<f64>) -> EigenPair {
    let imax = vector.iter().enumerate().fold(0, |b, (i, x)| if x.abs() > vector[b].abs() { i } else { b });
    EigenPair {
        value: 0.0,
        loc_center: region.site_point(imax),
        vector,
        decay_rate: f64::NAN,
        participation: f64::NAN,
        residual: 0.0,
    }
}

#[test]
fn diagonal_case_gives_site_indicators() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let sample = DisorderSample::cube(Disorder::default(), 1, 2, 8).unwrap();
    let h = assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.2).unwrap();
    let pairs = eigensolve(&h).unwrap();
    let mut diag = h.diag.clone();
    diag.sort_by(f64::total_cmp);
    for (p, d) in pairs.iter().zip(&diag) {
        assert!((p.value - d).abs() < 1e-14);
        assert!(p.vector.iter().filter(|x| x.abs() > 1e-14).count() == 1);
        assert_eq!(p.decay_rate, f64::INFINITY);
        assert!((p.participation - 1.0).abs() < 1e-12);
    }
}

#[test]
fn two_by_two_example() {
    let h = HamiltonianMatrix {
        region: Region::subset(1, 1, vec![vec![0, 0], vec![1, 0]]).unwrap(),
        theta: 0.0,
        diag: vec![1.0, -1.0],
        edges: vec![(0, 1, 0.1)],
    };
    let p = eigensolve(&h).unwrap();
    assert!((p[0].value + 1.01f64.sqrt()).abs() < 1e-14);
    assert!((p[1].value - 1.01f64.sqrt()).abs() < 1e-14);
    assert!((p[1].value - 1.00499).abs() < 1e-5);
}

#[test]
fn wave_diagonal_eigenvalues() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Wave).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let sample = DisorderSample::cube(Disorder::default(), 1, 2, 1).unwrap();
    let omega = FrequencyVector::golden();
    let h = assemble(&spec, &region, &sample, &omega, 0.3).unwrap();
    let mut expect: Vec<f64> =
        region.sites().map(|s| (omega.dot(&s[1..]) + 0.3).powi(2) + sample.value(&s[..1]).unwrap()).collect();
    expect.sort_by(f64::total_cmp);
    for (p, e) in eigensolve(&h).unwrap().iter().zip(&expect) {
        assert!((p.value - e).abs() <= 4.0 * f64::EPSILON * e.abs().max(1.0));
    }
}

#[test]
fn decay_rates_near_log_coupling() {
    let eps = 0.01;
    let spec = OperatorSpec::new(1, 1, eps, 0.0, 1.0, Model::Schrodinger).unwrap();
    let region = line(40);
    let sample = DisorderSample::cube(Disorder::default(), 1, 40, 2).unwrap();
    let h = assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.0).unwrap();
    let mut rates: Vec<f64> = eigensolve(&h)
        .unwrap()
        .iter()
        .filter(|p| p.loc_center.j[0].abs() <= 30)
        .map(|p| decay_profile(p, &region, Direction::J).unwrap().rate)
        .collect();
    rates.sort_by(f64::total_cmp);
    let median = rates[rates.len() / 2];
    let target = -eps.ln();
    assert!(median > target / 2.0 && median < 2.0 * target, "{median}");
}

#[test]
fn decay_profile_edge_cases() {
    let region = line(5);
    let flat = pair_on(&region, vec![1.0 / 11f64.sqrt(); 11]);
    let fit = decay_profile(&flat, &region, Direction::All).unwrap();
    assert!(fit.rate.abs() < 1e-12);
    let exp: Vec<f64> = (-5i64..=5).map(|j| (-0.7 * j.abs() as f64).exp()).collect();
    let fit = decay_profile(&pair_on(&region, exp), &region, Direction::J).unwrap();
    assert!((fit.rate - 0.7).abs() < 1e-12);
    let mut delta = vec![0.0; 11];
    delta[5] = 1.0;
    assert_eq!(decay_profile(&pair_on(&region, delta), &region, Direction::J).unwrap().rate, f64::INFINITY);
    let short = line(1);
    assert!(matches!(decay_profile(&pair_on(&short, vec![0.6, 0.8, 0.0]), &short, Direction::J), Err(Error::InvalidParameter { .. })));
}

#[test]
fn schnol_examples() {
    let region = line(5);
    let mut v = vec![0.0; 11];
    v[5] = 1.0;
    assert!(schnol_bound_check(&pair_on(&region, v.clone()), &region, 2.0));
    assert!(schnol_bound_check(&pair_on(&region, v.clone()), &region, 0.0));
    let big: Vec<f64> = v.iter().map(|x| x * 1e6).collect();
    assert!(!schnol_bound_check(&pair_on(&region, big), &region, 2.0));
}

#[test]
fn census_diagonal_case_is_fully_localized() {
    let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 4);
    let s = localization_census(&spec, 5, &region, &FrequencyVector::golden(), 0.0, (-0.5, 0.5), 1.0, PR_THRESHOLD, 1)
        .unwrap();
    assert!(s.pairs > 0);
    assert_eq!(s.fraction, 1.0);
}

#[test]
fn census_strong_disorder() {
    let spec = OperatorSpec::new(1, 1, 0.01, 0.001, 1.0, Model::Schrodinger).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 10);
    let s = localization_census(&spec, 10, &region, &FrequencyVector::golden(), 0.0, (-0.5, 0.5), 1.0, PR_THRESHOLD, 3)
        .unwrap();
    assert!(s.fraction >= 0.95, "{}", s.fraction);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_trace_and_completeness(seed in 0u64..10_000, eps in 0.0f64..0.5, delta in 0.0f64..0.5) {
        let spec = OperatorSpec::new(1, 1, eps, delta, 1.0, Model::Schrodinger).unwrap();
        let region = make_box(&SitePoint::origin(1, 1), 3);
        let sample = DisorderSample::cube(Disorder::default(), 1, 3, seed).unwrap();
        let h = assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.4).unwrap();
        let pairs = eigensolve(&h).unwrap();
        let norm = h.norm_bound();
        let trace: f64 = h.diag.iter().sum();
        prop_assert!((pairs.iter().map(|p| p.value).sum::<f64>() - trace).abs() < 1e-10 * (1.0 + norm));
        prop_assert!(pairs.windows(2).all(|w| w[0].value <= w[1].value));
        for p in &pairs {
            prop_assert!(p.residual <= 1e-10 * norm);
            prop_assert!((p.vector.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for m in 0..h.len() {
            let w: f64 = pairs.iter().map(|p| p.vector[m].powi(2)).sum();
            prop_assert!((w - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_shift(seed in 0u64..10_000, s in -1.0f64..1.0) {
        let spec = OperatorSpec::new(1, 1, 0.1, 0.05, 1.0, Model::Schrodinger).unwrap();
        let region = make_box(&SitePoint::origin(1, 1), 3);
        let sample = DisorderSample::cube(Disorder::default(), 1, 3, seed).unwrap();
        let omega = FrequencyVector::golden();
        let a = eigensolve(&assemble(&spec, &region, &sample, &omega, 0.2).unwrap()).unwrap();
        let b = eigensolve(&assemble(&spec, &region, &sample, &omega, 0.2 + s).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y.value - x.value - s).abs() < 1e-10);
        }
    }
}
