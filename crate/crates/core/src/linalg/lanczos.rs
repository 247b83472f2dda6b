use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;
use num_traits::Float;
use rand::Rng;

use crate::error::Result;
use crate::rng::trial_rng;

/// Ritz pair of a symmetric operator.
#[derive(Clone, Debug)]
pub struct Ritz {
    pub value: f64,
    /// Residual bound `|beta_k s_k|`.
    pub residual: f64,
    pub vector: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lanczos with full reorthogonalisation on a symmetric operator of size `n`.
///
/// Every `check` iterations the Ritz values are computed and `done` is asked
/// whether to stop; the returned Ritz pairs carry eigenvector estimates and
/// residual bounds. Iteration also stops when an invariant subspace is found.
pub fn lanczos(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    max_iter: usize,
    check: usize,
    mut done: impl FnMut(&[(f64, f64)]) -> bool,
) -> Result<Vec<Ritz>> {
    let max_iter = max_iter.min(n).max(1);
    let mut rng = trial_rng(0x5EED_1A2C, &[n as u64]);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nq = Float::sqrt(dot(&q, &q));
    q.iter_mut().for_each(|x| *x /= nq);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut last: Option<(Vec<f64>, Mat<f64>)> = None;

    for k in 0..max_iter {
        apply(&basis[k], &mut w);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = Float::sqrt(dot(&w, &w));
        let exhausted = b <= 1e-14 * alpha.iter().fold(1e-300, |m: f64, x| m.max(x.abs())) || k + 1 == max_iter;
        let want_check = (k + 1) % check.max(1) == 0 || exhausted;
        if want_check {
            let (vals, vecs) = tridiag_eigen(&alpha, &beta)?;
            let pairs: Vec<(f64, f64)> =
                vals.iter().enumerate().map(|(i, &v)| (v, (b * vecs[(k, i)]).abs())).collect();
            let stop = done(&pairs) || exhausted;
            last = Some((vals, vecs));
            if stop {
                beta.push(b);
                break;
            }
        }
        beta.push(b);
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }

    let (vals, vecs) = last.expect("at least one check");
    let k = vals.len();
    let b_last = beta[k - 1];
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = vec![0.0; n];
        for (r, qv) in basis.iter().take(k).enumerate() {
            let c = vecs[(r, i)];
            v.iter_mut().zip(qv).for_each(|(x, y)| *x += c * y);
        }
        out.push(Ritz { value: vals[i], residual: (b_last * vecs[(k - 1, i)]).abs(), vector: v });
    }
    Ok(out)
}

fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    super::sym_eigen(t.as_ref())
}
