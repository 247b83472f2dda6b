use proptest::prelude::*;
use qelab_core::lattice::{l1, make_box};
use qelab_core::operators::*;
use qelab_core::{Region, SitePoint};

fn spec(model: Model, eps: f64, delta: f64) -> OperatorSpec {
    OperatorSpec::new(1, 1, eps, delta, 1.0, model).unwrap()
}

#[test]
fn disorder_draws_in_support_and_deterministic() {
    let a = DisorderSample::cube(Disorder::default(), 2, 5, 42).unwrap();
    let b = DisorderSample::cube(Disorder::default(), 2, 5, 42).unwrap();
    assert_eq!(a, b);
    assert!(a.values().iter().all(|v| (-1.0..=1.0).contains(v)));
}

#[test]
fn disorder_mean_and_variance() {
    let s = DisorderSample::draw(Disorder::default(), vec![0], vec![99_999], 7).unwrap();
    let n = s.values().len() as f64;
    let mean = s.values().iter().sum::<f64>() / n;
    assert!(mean.abs() <= 3.0 * (1.0f64 / 3.0).sqrt() / n.sqrt(), "{mean}");
    let var = s.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 1.0 / 3.0).abs() < 0.01);
}

#[test]
fn diagonal_case_entries() {
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let sample = DisorderSample::cube(Disorder::default(), 1, 2, 3).unwrap();
    let omega = FrequencyVector::golden();
    let h = assemble(&spec(Model::Schrodinger, 0.0, 0.0), &region, &sample, &omega, 0.25).unwrap();
    assert!(h.edges.iter().all(|e| e.2 == 0.0));
    for (i, s) in region.sites().enumerate() {
        assert_eq!(h.diag[i], omega.dot(&s[1..]) + 0.25 + sample.value(&s[..1]).unwrap());
    }
}

#[test]
fn wave_diagonal_entry() {
    let region = Region::subset(1, 1, vec![vec![0, 1]]).unwrap();
    let sample = DisorderSample::from_values(Disorder::default(), vec![0], vec![0], vec![0.3]).unwrap();
    let omega = FrequencyVector::new(vec![0.7]).unwrap();
    let h = assemble(&spec(Model::Wave, 0.1, 0.0), &region, &sample, &omega, 0.2).unwrap();
    assert!((h.diag[0] - 1.11).abs() < 1e-14);
}

#[test]
fn spectrum_support_examples() {
    let region = make_box(&SitePoint::origin(1, 1), 3);
    let omega = FrequencyVector::golden();
    let samples: Vec<DisorderSample> =
        (0..100).map(|s| DisorderSample::cube(Disorder::default(), 1, 3, s).unwrap()).collect();
    let r = spectrum_support_check(&spec(Model::Schrodinger, 0.0, 0.0), &region, &samples[..5], &omega, 0.0).unwrap();
    assert!(r.pass);
    let r = spectrum_support_check(&spec(Model::Schrodinger, 0.05, 0.0), &region, &samples, &omega, 0.0).unwrap();
    assert_eq!(r.violations, 0);
    let (lo, hi) = r.allowed;
    assert!((lo - (-3.0 * omega.as_slice()[0] - 1.1)).abs() < 1e-12 && (hi - (3.0 * omega.as_slice()[0] + 1.1)).abs() < 1e-12);
    // Restricting to the n = 0 slice at theta = 0 gives [-1.1, 1.1].
    let slice = make_box(&SitePoint::origin(1, 1), 3);
    let slice = Region::subset(1, 1, slice.sites().filter(|s| s[1] == 0).map(|s| s.to_vec()).collect()).unwrap();
    let r = spectrum_support_check(&spec(Model::Schrodinger, 0.05, 0.0), &slice, &samples, &omega, 0.0).unwrap();
    assert!(r.pass && (r.allowed.0 + 1.1).abs() < 1e-12 && (r.allowed.1 - 1.1).abs() < 1e-12);
}

#[test]
fn theta_derivative_examples() {
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let sample = DisorderSample::cube(Disorder::default(), 1, 2, 1).unwrap();
    let omega = FrequencyVector::golden();
    let s = spec(Model::Schrodinger, 0.1, 0.05);
    assert!(theta_derivative_check(&s, &region, &sample, &omega, 0.3, 0.1, Difference::Forward).unwrap() < 1e-12);
    let w = spec(Model::Wave, 0.1, 0.05);
    assert!(theta_derivative_check(&w, &region, &sample, &omega, 0.3, 0.5, Difference::Central).unwrap() < 1e-12);
    let h = 0.01;
    let dev = theta_derivative_check(&w, &region, &sample, &omega, 0.3, h, Difference::Forward).unwrap();
    assert!((dev - h).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetric_nearest_neighbour_graph(seed in 0u64..1000, eps in 0.01f64..0.5, delta in 0.01f64..0.5, theta in 0.0f64..1.0) {
        let region = make_box(&SitePoint::origin(1, 1), 3);
        let sample = DisorderSample::cube(Disorder::default(), 1, 3, seed).unwrap();
        let h = assemble(&spec(Model::Schrodinger, eps, delta), &region, &sample, &FrequencyVector::golden(), theta).unwrap();
        let m = h.to_dense();
        for i in 0..h.len() {
            for k in 0..h.len() {
                prop_assert_eq!(m[(i, k)], m[(k, i)]);
                let adjacent = l1(region.site(i), region.site(k)) == 1;
                if i != k {
                    prop_assert_eq!(m[(i, k)] != 0.0, adjacent);
                }
            }
        }
    }

    #[test]
    fn shift_covariance(seed in 0u64..1000, theta in -1.0f64..1.0, s in -1.0f64..1.0) {
        let region = make_box(&SitePoint::origin(1, 1), 2);
        let sample = DisorderSample::cube(Disorder::default(), 1, 2, seed).unwrap();
        let sp = spec(Model::Schrodinger, 0.2, 0.1);
        let omega = FrequencyVector::golden();
        let a = assemble(&sp, &region, &sample, &omega, theta).unwrap();
        let b = assemble(&sp, &region, &sample, &omega, theta + s).unwrap();
        for i in 0..a.len() {
            prop_assert!((b.diag[i] - (a.diag[i] + s)).abs() <= 4.0 * f64::EPSILON * (1.0 + b.diag[i].abs()));
        }
        prop_assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn drive_block_gershgorin(seed in 0u64..1000, delta in 0.0f64..1.0, b in 0.1f64..2.0) {
        let sp = OperatorSpec::new(1, 2, 0.0, delta, b, Model::Schrodinger).unwrap();
        let region = make_box(&SitePoint::origin(1, 2), 2);
        let sample = DisorderSample::cube(Disorder::default(), 1, 2, seed).unwrap();
        let h = assemble(&sp, &region, &sample, &FrequencyVector::quadratic_irrational(2, 0), 0.0).unwrap();
        let mut rows = vec![0.0; h.len()];
        for &(i, k, w) in &h.edges {
            rows[i as usize] += w.abs();
            rows[k as usize] += w.abs();
        }
        for (i, s) in region.sites().enumerate() {
            prop_assert!(rows[i] <= 2.0 * 2.0 * delta * (-b * s[0].abs() as f64).exp() + 1e-15);
        }
    }

    #[test]
    fn subregion_is_principal_submatrix(seed in 0u64..1000, cx in -2i64..2, cy in -2i64..2) {
        let sp = spec(Model::Wave, 0.15, 0.1);
        let big = make_box(&SitePoint::origin(1, 1), 4);
        let small = make_box(&SitePoint::new(vec![cx], vec![cy]), 2);
        let sample = DisorderSample::cube(Disorder::default(), 1, 4, seed).unwrap();
        let omega = FrequencyVector::golden();
        let hb = assemble(&sp, &big, &sample, &omega, 0.4).unwrap();
        let hs = assemble(&sp, &small, &sample, &omega, 0.4).unwrap();
        let idx: Vec<usize> = small.sites().map(|s| big.index_of(s).unwrap()).collect();
        let p = hb.principal(&idx);
        let d = hs.to_dense();
        for i in 0..idx.len() {
            for k in 0..idx.len() {
                prop_assert_eq!(p[(i, k)], d[(i, k)]);
            }
        }
    }
}
