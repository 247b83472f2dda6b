//! Dense kernels on top of `faer`, the block-tridiagonal resolvent used for
//! boxes above [`DENSE_CAP`](crate::DENSE_CAP), and Lanczos.

mod fpenv;
mod lanczos;
mod slab;

use alloc::vec::Vec;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Accum, Mat, MatRef, Par, Side};

pub use fpenv::FlushDenormals;
pub use lanczos::{lanczos, Ritz};
pub use slab::{Slab, SlabResolvent};

use crate::error::{Error, Result};
use crate::operators::HamiltonianMatrix;
use crate::DENSE_CAP;

pub(crate) fn check_cap(sites: usize) -> Result<()> {
    if sites > DENSE_CAP {
        return Err(Error::CapExceeded { sites, cap: DENSE_CAP });
    }
    Ok(())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::NoConvergence)
}

/// Ascending eigenvalues and orthonormal eigenvectors (columns).
pub fn sym_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence)?;
    let s = e.S();
    let values = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, e.U().to_owned()))
}

/// Eigenvalues of an assembled operator (dense path).
pub fn eigenvalues(h: &HamiltonianMatrix) -> Result<Vec<f64>> {
    check_cap(h.len())?;
    sym_eigenvalues(h.to_dense().as_ref())
}

/// Inverse by partially pivoted LU.
pub fn inverse(m: MatRef<'_, f64>) -> Mat<f64> {
    if m.nrows() == 0 {
        return Mat::zeros(0, 0);
    }
    m.partial_piv_lu().inverse()
}

/// `m - e I`.
pub fn shifted(m: MatRef<'_, f64>, e: f64) -> Mat<f64> {
    let mut out = m.to_owned();
    for i in 0..out.nrows() {
        out[(i, i)] -= e;
    }
    out
}

pub fn matmul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// Maximum absolute row sum.
pub fn norm_inf(m: MatRef<'_, f64>) -> f64 {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

/// Distance from `e` to a sorted spectrum.
pub fn dist_to_spectrum(sorted: &[f64], e: f64) -> f64 {
    let k = sorted.partition_point(|&x| x < e);
    let mut d = f64::INFINITY;
    if k < sorted.len() {
        d = d.min(sorted[k] - e);
    }
    if k > 0 {
        d = d.min(e - sorted[k - 1]);
    }
    d
}

/// Number of entries `<= x` in a sorted spectrum.
pub fn count_at_most(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Number of eigenvalues of `h` strictly below `x`, by inertia.
pub fn count_below(h: &HamiltonianMatrix, x: f64) -> Result<usize> {
    if h.len() <= DENSE_CAP {
        let eig = eigenvalues(h)?;
        return Ok(eig.partition_point(|&v| v < x));
    }
    let slab = Slab::from_box(h).ok_or(Error::CapExceeded { sites: h.len(), cap: DENSE_CAP })?;
    slab.inertia_below(x)
}
