//! Box operators are block tridiagonal along the first spatial axis: slice
//! `s` holds the sites whose first coordinate is the `s`-th value, and
//! neighbouring slices couple through `eps * I`.

use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Accum, Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::operators::HamiltonianMatrix;

#[derive(Clone, Debug)]
pub struct Slab {
    pub blocks: usize,
    pub width: usize,
    pub eps: f64,
    diag: Vec<Mat<f64>>,
}

fn invert_checked(m: &Mat<f64>, energy: f64) -> Result<Mat<f64>> {
    let inv = m.partial_piv_lu().inverse();
    let finite = (0..inv.ncols()).all(|j| (0..inv.nrows()).all(|i| inv[(i, j)].is_finite()));
    if !finite {
        return Err(Error::NearSingular { energy, distance: 0.0 });
    }
    Ok(inv)
}

fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn gemm(dst: &mut Mat<f64>, a: MatRef<'_, f64>, b: MatRef<'_, f64>, alpha: f64, accumulate: bool) {
    let beta = if accumulate { Accum::Add } else { Accum::Replace };
    faer::linalg::matmul::matmul(dst.as_mut(), beta, a, b, alpha, Par::Seq);
}

impl Slab {
    /// Splits a box operator into slices; `None` for other regions or when
    /// the coupling between slices is not `eps * I`.
    pub fn from_box(h: &HamiltonianMatrix) -> Option<Slab> {
        let (_, radius) = h.region.as_box()?;
        let blocks = 2 * radius as usize + 1;
        let width = h.len() / blocks;
        let mut diag: Vec<Mat<f64>> = (0..blocks).map(|_| Mat::zeros(width, width)).collect();
        for (i, &v) in h.diag.iter().enumerate() {
            diag[i / width][(i % width, i % width)] = v;
        }
        let mut eps: Option<f64> = None;
        let mut cross = 0usize;
        for &(i, k, v) in &h.edges {
            let (i, k) = (i as usize, k as usize);
            let (si, sk) = (i / width, k / width);
            if si == sk {
                diag[si][(i % width, k % width)] = v;
                diag[si][(k % width, i % width)] = v;
            } else {
                if k != i + width {
                    return None;
                }
                match eps {
                    None => eps = Some(v),
                    Some(e) if e == v => {}
                    Some(_) => return None,
                }
                cross += 1;
            }
        }
        let eps = eps.unwrap_or(0.0);
        if eps != 0.0 && cross != (blocks - 1) * width {
            return None;
        }
        Some(Slab { blocks, width, eps, diag })
    }

    pub fn len(&self) -> usize {
        self.blocks * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.blocks == 0
    }

    /// Number of eigenvalues strictly below `x`: the inertia of `H - x` is
    /// the sum of the inertias of the block Schur complements.
    pub fn inertia_below(&self, x: f64) -> Result<usize> {
        let e2 = self.eps * self.eps;
        let mut count = 0;
        let mut prev: Option<Mat<f64>> = None;
        for s in 0..self.blocks {
            let mut schur = super::shifted(self.diag[s].as_ref(), x);
            if let Some(g) = &prev {
                for j in 0..self.width {
                    for i in 0..self.width {
                        schur[(i, j)] -= e2 * g[(i, j)];
                    }
                }
            }
            symmetrize(&mut schur);
            let (vals, vecs) = super::sym_eigen(schur.as_ref())?;
            count += vals.iter().filter(|&&v| v < 0.0).count();
            if vals.contains(&0.0) {
                return Err(Error::NearSingular { energy: x, distance: 0.0 });
            }
            let mut scaled = vecs.clone();
            for j in 0..self.width {
                for i in 0..self.width {
                    scaled[(i, j)] /= vals[j];
                }
            }
            let mut g = Mat::<f64>::zeros(self.width, self.width);
            gemm(&mut g, scaled.as_ref(), vecs.as_ref().transpose(), 1.0, false);
            prev = Some(g);
        }
        Ok(count)
    }
}

/// Factorisation of `H - E` for block-wise access to the Green's function.
#[derive(Clone, Debug)]
pub struct SlabResolvent {
    pub energy: f64,
    eps: f64,
    width: usize,
    /// Inverses of the left-connected Schur complements.
    left: Vec<Mat<f64>>,
    /// Diagonal blocks of the full Green's function.
    diag: Vec<Mat<f64>>,
}

impl SlabResolvent {
    pub fn new(slab: &Slab, energy: f64) -> Result<Self> {
        let (nb, w, e2) = (slab.blocks, slab.width, slab.eps * slab.eps);
        let mut left: Vec<Mat<f64>> = Vec::with_capacity(nb);
        for s in 0..nb {
            let mut m = super::shifted(slab.diag[s].as_ref(), energy);
            if s > 0 {
                for j in 0..w {
                    for i in 0..w {
                        m[(i, j)] -= e2 * left[s - 1][(i, j)];
                    }
                }
            }
            let mut g = invert_checked(&m, energy)?;
            symmetrize(&mut g);
            left.push(g);
        }
        let mut right: Vec<Option<Mat<f64>>> = vec![None; nb];
        for s in (0..nb).rev() {
            let mut m = super::shifted(slab.diag[s].as_ref(), energy);
            if s + 1 < nb {
                let r = right[s + 1].as_ref().expect("filled");
                for j in 0..w {
                    for i in 0..w {
                        m[(i, j)] -= e2 * r[(i, j)];
                    }
                }
            }
            let mut g = invert_checked(&m, energy)?;
            symmetrize(&mut g);
            right[s] = Some(g);
        }
        let mut diag = Vec::with_capacity(nb);
        for s in 0..nb {
            let mut m = super::shifted(slab.diag[s].as_ref(), energy);
            for j in 0..w {
                for i in 0..w {
                    let mut c = 0.0;
                    if s > 0 {
                        c += left[s - 1][(i, j)];
                    }
                    if s + 1 < nb {
                        c += right[s + 1].as_ref().expect("filled")[(i, j)];
                    }
                    m[(i, j)] -= e2 * c;
                }
            }
            let mut g = invert_checked(&m, energy)?;
            symmetrize(&mut g);
            diag.push(g);
        }
        Ok(Self { energy, eps: slab.eps, width: w, left, diag })
    }

    pub fn blocks(&self) -> usize {
        self.left.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn diagonal_block(&self, s: usize) -> MatRef<'_, f64> {
        self.diag[s].as_ref()
    }

    /// Visits every block `G[s, t]` with `s <= t`, using
    /// `G[s, t] = -eps * g_s G[s+1, t]` where `g_s` is left-connected.
    /// Entries below [`UNDERFLOW`](crate::greens::UNDERFLOW) are flushed to
    /// zero while propagating; once a block vanishes, the blocks further
    /// from the diagonal are zero too and are not visited.
    pub fn for_each_block(&self, mut f: impl FnMut(usize, usize, MatRef<'_, f64>)) {
        let nb = self.blocks();
        let mut cur = Mat::<f64>::zeros(self.width, self.width);
        let mut next = Mat::<f64>::zeros(self.width, self.width);
        for t in 0..nb {
            f(t, t, self.diag[t].as_ref());
            if self.eps == 0.0 {
                continue;
            }
            cur.copy_from(&self.diag[t]);
            for s in (0..t).rev() {
                gemm(&mut next, self.left[s].as_ref(), cur.as_ref(), -self.eps, false);
                core::mem::swap(&mut cur, &mut next);
                if flush_underflow(&mut cur) {
                    break;
                }
                f(s, t, cur.as_ref());
            }
        }
    }

    /// Solves `(H - E) x = y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let (nb, w) = (self.blocks(), self.width);
        let mut z: Vec<f64> = y.to_vec();
        let mut tmp = vec![0.0; w];
        for s in 1..nb {
            matvec(self.left[s - 1].as_ref(), &z[(s - 1) * w..s * w], &mut tmp);
            for i in 0..w {
                z[s * w + i] -= self.eps * tmp[i];
            }
        }
        let mut x = vec![0.0; y.len()];
        let mut rhs = vec![0.0; w];
        for s in (0..nb).rev() {
            for i in 0..w {
                rhs[i] = z[s * w + i];
                if s + 1 < nb {
                    rhs[i] -= self.eps * x[(s + 1) * w + i];
                }
            }
            matvec(self.left[s].as_ref(), &rhs, &mut tmp);
            x[s * w..(s + 1) * w].copy_from_slice(&tmp);
        }
        x
    }
}

/// Zeroes entries below the underflow level; `true` if the block vanished.
fn flush_underflow(m: &mut Mat<f64>) -> bool {
    let mut all_zero = true;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.abs() < crate::greens::UNDERFLOW {
                m[(i, j)] = 0.0;
            } else {
                all_zero = false;
            }
        }
    }
    all_zero
}

fn matvec(m: MatRef<'_, f64>, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj != 0.0 {
            for i in 0..m.nrows() {
                y[i] += m[(i, j)] * xj;
            }
        }
    }
}
