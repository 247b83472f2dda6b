use faer::Mat;
use proptest::prelude::*;
use qelab_core::greens::*;
use qelab_core::lattice::make_box;
use qelab_core::spectral::eigensolve;
use qelab_core::{
    assemble, Disorder, DisorderSample, Error, FrequencyVector, HamiltonianMatrix, Model, OperatorSpec, Region,
    SitePoint,
};

fn pair_matrix(a: f64, b: f64, c: f64) -> HamiltonianMatrix {
    HamiltonianMatrix {
        region: Region::subset(1, 1, vec![vec![0, 0], vec![1, 0]]).unwrap(),
        theta: 0.0,
        diag: vec![a, c],
        edges: vec![(0, 1, b)],
    }
}

fn random_box(seed: u64, r: u32, model: Model, eps: f64, delta: f64) -> HamiltonianMatrix {
    let spec = OperatorSpec::new(1, 1, eps, delta, 1.0, model).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), r);
    let sample = DisorderSample::cube(Disorder::default(), 1, r as i64, seed).unwrap();
    assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.1 + 0.37 * seed as f64).unwrap()
}

#[test]
fn small_examples() {
    let one = HamiltonianMatrix {
        region: Region::subset(1, 1, vec![vec![0, 0]]).unwrap(),
        theta: 0.0,
        diag: vec![2.0],
        edges: vec![],
    };
    assert!((green(&one, 1.0).unwrap().matrix[(0, 0)] - 1.0).abs() < 1e-15);

    let g = green(&pair_matrix(1.0, 0.1, -1.0), 0.0).unwrap().matrix;
    let det = -1.01;
    let expect = [[-1.0 / det, -0.1 / det], [-0.1 / det, 1.0 / det]];
    for i in 0..2 {
        for k in 0..2 {
            assert!((g[(i, k)] - expect[i][k]).abs() < 1e-14);
        }
    }
    assert!((g[(0, 0)] - 0.990_099_009_900_99).abs() < 1e-12);
}

#[test]
fn diagonal_green() {
    let h = random_box(3, 2, Model::Schrodinger, 0.0, 0.0);
    let g = green(&h, 0.05).unwrap().matrix;
    for i in 0..h.len() {
        for k in 0..h.len() {
            let e = if i == k { 1.0 / (h.diag[i] - 0.05) } else { 0.0 };
            assert!((g[(i, k)] - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }
}

#[test]
fn near_singular_is_reported() {
    let h = pair_matrix(1.0, 0.0, -1.0);
    assert!(matches!(green(&h, 1.0), Err(Error::NearSingular { .. })));
}

fn unit_norm_green(matrix: Mat<f64>) -> GreenFunction {
    GreenFunction { op_norm: 1.0, energy: 0.0, matrix }
}

#[test]
fn classify_examples() {
    let region = make_box(&SitePoint::origin(1, 1), 2);
    let h = HamiltonianMatrix { diag: vec![0.0; region.len()], edges: vec![], theta: 0.0, region };
    let th = Thresholds::new(4.0, 1.0, 0.5).unwrap();
    let n = h.len();
    let diag = Mat::<f64>::from_fn(n, n, |i, k| if i == k { 0.5 } else { 0.0 });
    assert_eq!(classify(&h, &unit_norm_green(diag), &th).verdict, Verdict::Good);
    // Unit entry between the corners (-2, -2) and (2, 2), at distance 8 > N / 4.
    let (a, b) = (0, n - 1);
    let spike = Mat::<f64>::from_fn(n, n, |i, k| match (i, k) {
        _ if i == k => 0.5,
        _ if (i, k) == (a, b) || (i, k) == (b, a) => 1.0,
        _ => 0.0,
    });
    for gamma in [1e-3, 1.0, 10.0] {
        let th = Thresholds::new(4.0, gamma, 0.5).unwrap();
        assert_eq!(classify(&h, &unit_norm_green(spike.clone()), &th).verdict, Verdict::Bad);
    }
}

#[test]
fn identity_edge_cases() {
    let h = random_box(1, 3, Model::Schrodinger, 0.1, 0.05);
    assert_eq!(resolvent_identity(&h, 0.01, 0.01).unwrap().absolute, 0.0);
    let base = h.clone();
    let r = resolvent_expansion(&h, &base, 0.013, 3).unwrap();
    assert!(r.residuals.iter().all(|&x| x == 0.0));
    // Order zero residual is the distance between the two resolvents.
    let spec0 = OperatorSpec::new(1, 1, 0.1, 0.0, 1.0, Model::Schrodinger).unwrap();
    let region = make_box(&SitePoint::origin(1, 1), 3);
    let sample = DisorderSample::cube(Disorder::default(), 1, 3, 1).unwrap();
    let h0 = assemble(&spec0, &region, &sample, &FrequencyVector::golden(), 0.47).unwrap();
    let spec1 = OperatorSpec { delta: 0.05, ..spec0 };
    let h1 = assemble(&spec1, &region, &sample, &FrequencyVector::golden(), 0.47).unwrap();
    let r = resolvent_expansion(&h1, &h0, 0.013, 0).unwrap();
    let g = green(&h1, 0.013).unwrap().matrix;
    let g0 = green(&h0, 0.013).unwrap().matrix;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        worst = worst.max((0..g.ncols()).map(|k| (g[(i, k)] - g0[(i, k)]).abs()).sum());
    }
    assert!((r.residuals[0] - worst).abs() <= 1e-12 * worst.max(1.0));
}

#[test]
fn resolvent_identity_near_resonance() {
    let h = random_box(4, 3, Model::Schrodinger, 0.1, 0.05);
    let eig: Vec<f64> = eigensolve(&h).unwrap().into_iter().map(|p| p.value).collect();
    let lambda = eig[eig.len() / 2] + 1e-6;
    let r = resolvent_identity(&h, 0.0, lambda).unwrap();
    assert!(r.relative <= 1e-6, "{}", r.relative);
}

#[test]
fn poisson_examples() {
    // Without hopping the eigenvector sits on one site outside the sub-box.
    let h = random_box(5, 4, Model::Schrodinger, 0.0, 0.0);
    let sub = make_box(&SitePoint::origin(1, 1), 1);
    let outside = h.region.index_of(&[4, 4]).unwrap();
    let mut psi = vec![0.0; h.len()];
    psi[outside] = 1.0;
    assert_eq!(poisson_residual(&h, h.diag[outside], &psi, &sub).unwrap(), 0.0);

    let h = random_box(6, 8, Model::Schrodinger, 0.1, 0.05);
    let sub = make_box(&SitePoint::origin(1, 1), 3);
    for p in eigensolve(&h).unwrap().iter().step_by(29) {
        let r = poisson_residual(&h, p.value, &p.vector, &sub).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    let h = random_box(6, 2, Model::Schrodinger, 0.1, 0.05);
    let p = &eigensolve(&h).unwrap()[3];
    assert!(matches!(poisson_residual(&h, p.value, &p.vector, &h.region.clone()), Err(Error::NearSingular { .. })));
}

#[test]
fn auxiliary_examples() {
    let h = random_box(7, 3, Model::Wave, 0.1, 0.05);
    let energy = 0.9;
    let g = green(&h, energy).unwrap();
    let empty = Region::subset(1, 1, vec![]).unwrap();
    let aux = auxiliary_matrix(&h, &empty, energy).unwrap();
    let s = sandwich_check(&aux, &g, 3.0, 1.0, 1.0).unwrap();
    assert!((s.aux_inverse_norm - s.green_norm).abs() <= 1e-10 * s.green_norm);
    assert!(schur_block_residual(&aux, &g) < 1e-12);

    // Two uncoupled blocks: the correction vanishes.
    let h = random_box(7, 3, Model::Wave, 0.0, 0.0);
    let star = Region::subset(1, 1, h.region.sites().filter(|s| s[0] < 0).map(|s| s.to_vec()).collect()).unwrap();
    let aux = auxiliary_matrix(&h, &star, energy).unwrap();
    for (a, &i) in aux.complement.iter().enumerate() {
        for (b, &k) in aux.complement.iter().enumerate() {
            let e = if i == k { h.diag[i] - energy } else { 0.0 };
            assert_eq!(aux.matrix[(a, b)], e);
        }
    }
}

#[test]
fn sandwich_on_random_wave_instances() {
    for seed in 0..50 {
        let h = random_box(seed, 4, Model::Wave, 0.1, 0.05);
        let energy = 0.77;
        let g = green(&h, energy).unwrap();
        let star = Region::subset(1, 1, h.region.sites().filter(|s| s[0] + s[1] < 0).map(|s| s.to_vec()).collect()).unwrap();
        let aux = auxiliary_matrix(&h, &star, energy).unwrap();
        let s = sandwich_check(&aux, &g, 4.0, 10.0, 10.0).unwrap();
        assert!(s.lower_ok && s.upper_ok);
        assert!(schur_block_residual(&aux, &g) <= 1e-9 * g.op_norm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_inverts_and_is_symmetric(seed in 0u64..10_000, energy in -1.5f64..1.5) {
        let h = random_box(seed, 3, Model::Schrodinger, 0.2, 0.1);
        if let Ok(g) = green(&h, energy) {
            prop_assume!(g.op_norm < 1e8);
            let m = h.to_dense();
            let n = h.len();
            let mut worst = 0.0f64;
            for i in 0..n {
                for k in 0..n {
                    let mut s = -energy * g.matrix[(i, k)];
                    for l in 0..n {
                        s += m[(i, l)] * g.matrix[(l, k)];
                    }
                    worst = worst.max((s - (i == k) as u8 as f64).abs());
                    prop_assert!((g.matrix[(i, k)] - g.matrix[(k, i)]).abs() <= 1e-12 * g.op_norm);
                }
            }
            prop_assert!(worst <= 1e-10 * g.op_norm.max(1.0));
        }
    }

    #[test]
    fn verdict_invariant_under_relabelling(seed in 0u64..10_000, energy in -1.0f64..1.0) {
        let h = random_box(seed, 3, Model::Schrodinger, 0.1, 0.05);
        // Reflect every coordinate: distances are preserved, the site order reverses.
        let flipped: Vec<Vec<i64>> = h.region.sites().map(|s| s.iter().map(|x| -x).collect()).collect();
        let region = Region::subset(1, 1, flipped).unwrap();
        let n = h.len();
        let perm: Vec<usize> = (0..n).map(|i| n - 1 - i).collect();
        let h2 = HamiltonianMatrix {
            region,
            theta: h.theta,
            diag: perm.iter().map(|&i| h.diag[i]).collect(),
            edges: h.edges.iter().map(|&(i, k, w)| {
                let (a, b) = (perm[i as usize] as u32, perm[k as usize] as u32);
                (a.min(b), a.max(b), w)
            }).collect(),
        };
        let th = Thresholds::new(7.0, 0.5, 0.5).unwrap();
        if let (Ok(g1), Ok(g2)) = (green(&h, energy), green(&h2, energy)) {
            let a = classify(&h, &g1, &th);
            let b = classify(&h2, &g2, &th);
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert!((a.gamma_fit - b.gamma_fit).abs() < 1e-8);
        }
    }

    #[test]
    fn resolvent_identity_random(seed in 0u64..10_000, lambda in -2.0f64..2.0) {
        let h = random_box(seed, 3, Model::Schrodinger, 0.1, 0.05);
        if let Ok(r) = resolvent_identity(&h, 0.0, lambda) {
            prop_assert!(r.relative <= 1e-10);
        }
    }
}
