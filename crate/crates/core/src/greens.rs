//! Finite-volume Green's functions `G = (H - E)^{-1}`, the good/bad verdict,
//! and the exact identities they satisfy.

use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{boundary_indices, l1, Descriptor, Region, RegionKind};
use crate::linalg::{self, Slab, SlabResolvent};
use crate::operators::HamiltonianMatrix;
use crate::stats::LineAccumulator;

/// Entries below this magnitude are treated as underflow and skipped by fits.
pub const UNDERFLOW: f64 = 1e-300;

/// Relative distance to the spectrum below which `H - E` counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GreenFunction {
    pub matrix: Mat<f64>,
    pub energy: f64,
    /// Operator 2-norm, `1 / dist(E, spec H)`.
    pub op_norm: f64,
}

/// Dense Green's function.
pub fn green(h: &HamiltonianMatrix, energy: f64) -> Result<GreenFunction> {
    linalg::check_cap(h.len())?;
    let dense = h.to_dense();
    let eig = linalg::sym_eigenvalues(dense.as_ref())?;
    let dist = linalg::dist_to_spectrum(&eig, energy);
    let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if dist < SINGULAR_TOL * scale {
        return Err(Error::NearSingular { energy, distance: dist });
    }
    let matrix = linalg::inverse(linalg::shifted(dense.as_ref(), energy).as_ref());
    Ok(GreenFunction { matrix, energy, op_norm: 1.0 / dist })
}

/// Scale `N` and the decay/norm exponents used by the verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub scale: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl Thresholds {
    pub fn new(scale: f64, gamma: f64, sigma: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(invalid("scale", "must be positive"));
        }
        if !(gamma > 0.0) {
            return Err(invalid("gamma", "must be positive"));
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(invalid("sigma", "must lie in (0, 1)"));
        }
        Ok(Self { scale, gamma, sigma })
    }

    /// `exp(N^sigma)`.
    pub fn norm_threshold(&self) -> f64 {
        Float::exp(Float::powf(self.scale, self.sigma))
    }

    /// Pairs with `|m - m'| > N / 4` must decay.
    pub fn window(&self) -> f64 {
        self.scale / 4.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Good,
    Bad,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenReport {
    pub kind: RegionKind,
    pub region: Descriptor,
    pub theta: f64,
    pub energy: f64,
    pub op_norm: f64,
    /// Least-squares slope of `ln|G(m, m')|` against `-|m - m'|`.
    pub gamma_fit: f64,
    pub fit_residual: f64,
    /// `max ln|G(m, m')| + gamma |m - m'|` over pairs outside the window;
    /// decay holds iff this is negative.
    pub decay_excess: f64,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
}

/// Natural logarithm of a positive normal number, via the exponent and an
/// atanh series for the mantissa (absolute error below `1e-15`).
#[inline]
pub fn ln_positive(x: f64) -> f64 {
    const LN2: f64 = core::f64::consts::LN_2;
    const SQRT2: f64 = core::f64::consts::SQRT_2;
    let bits = x.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = f64::from_bits((bits & 0x000F_FFFF_FFFF_FFFF) | 0x3FF0_0000_0000_0000);
    if m > SQRT2 {
        m *= 0.5;
        e += 1;
    }
    let s = (m - 1.0) / (m + 1.0);
    let s2 = s * s;
    let p = 1.0
        + s2 * (1.0 / 3.0
            + s2 * (1.0 / 5.0
                + s2 * (1.0 / 7.0
                    + s2 * (1.0 / 9.0
                        + s2 * (1.0 / 11.0
                            + s2 * (1.0 / 13.0 + s2 * (1.0 / 15.0 + s2 * (1.0 / 17.0 + s2 / 19.0))))))));
    e as f64 * LN2 + 2.0 * s * p
}

/// Per-distance statistics of `ln|G|`.
#[derive(Clone, Debug)]
struct DecayScan {
    /// `[count, sum y, sum y^2, max |G|]` indexed by l1 distance.
    buckets: Vec<[f64; 4]>,
}

impl DecayScan {
    fn new(max_dist: usize) -> Self {
        Self { buckets: vec![[0.0; 4]; max_dist + 1] }
    }

    #[inline]
    fn push(&mut self, dist: usize, value: f64) {
        let a = value.abs();
        if a < UNDERFLOW {
            return;
        }
        let y = ln_positive(a);
        let b = &mut self.buckets[dist];
        b[0] += 1.0;
        b[1] += y;
        b[2] += y * y;
        if a > b[3] {
            b[3] = a;
        }
    }

    fn finish(self, h: &HamiltonianMatrix, energy: f64, op_norm: f64, th: Thresholds) -> GreenReport {
        let mut fit = LineAccumulator::default();
        let mut excess = f64::NEG_INFINITY;
        for (d, b) in self.buckets.iter().enumerate() {
            if b[0] == 0.0 {
                continue;
            }
            fit.push_grouped(-(d as f64), b[0], b[1], b[2]);
            if d as f64 > th.window() {
                excess = excess.max(ln_positive(b[3]) + th.gamma * d as f64);
            }
        }
        let (gamma_fit, fit_residual) = match fit.fit() {
            Some(f) => (f.slope, f.rms),
            None => (f64::NAN, f64::NAN),
        };
        let good = op_norm < th.norm_threshold() && excess < 0.0;
        GreenReport {
            kind: h.region.kind(),
            region: h.region.descriptor().clone(),
            theta: h.theta,
            energy,
            op_norm,
            gamma_fit,
            fit_residual,
            decay_excess: excess,
            verdict: if good { Verdict::Good } else { Verdict::Bad },
            thresholds: th,
        }
    }
}

/// Verdict for a dense Green's function of `h`.
pub fn classify(h: &HamiltonianMatrix, g: &GreenFunction, th: &Thresholds) -> GreenReport {
    let region = &h.region;
    let mut scan = DecayScan::new(region.diameter() as usize);
    for k in 0..h.len() {
        let xk = region.site(k);
        for i in 0..k {
            scan.push(l1(region.site(i), xk) as usize, g.matrix[(i, k)]);
        }
    }
    scan.finish(h, g.energy, g.op_norm, *th)
}

/// Builds the Green's function of `h` at `energy` and classifies it. Boxes
/// go through the block-tridiagonal path, other regions are dense.
pub fn classify_operator(h: &HamiltonianMatrix, energy: f64, th: &Thresholds) -> Result<GreenReport> {
    let _ftz = linalg::FlushDenormals::new();
    let Some(slab) = Slab::from_box(h) else {
        let g = green(h, energy)?;
        return Ok(classify(h, &g, th));
    };
    let res = SlabResolvent::new(&slab, energy)?;
    let op_norm = slab_norm(&res)?;
    let w = res.width();
    let region = &h.region;
    // Distance within a slice; slices differ in the first coordinate only.
    let mut within = vec![0u32; w * w];
    for a in 0..w {
        for b in 0..w {
            within[a * w + b] = l1(&region.site(a)[1..], &region.site(b)[1..]) as u32;
        }
    }
    let mut scan = DecayScan::new(region.diameter() as usize);
    res.for_each_block(|s, t, g| {
        let gap = t - s;
        for b in 0..w {
            let a_end = if s == t { b } else { w };
            let col = g.col(b);
            for a in 0..a_end {
                scan.push(gap + within[a * w + b] as usize, col[a]);
            }
        }
    });
    Ok(scan.finish(h, energy, op_norm, *th))
}

/// Operator norm of the block resolvent by Lanczos on `G`.
pub fn slab_norm(res: &SlabResolvent) -> Result<f64> {
    let n = res.blocks() * res.width();
    let ritz = linalg::lanczos(
        n,
        |x, y| y.copy_from_slice(&res.solve(x)),
        400,
        5,
        |pairs| {
            let top = pairs.iter().max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
            top.is_some_and(|&(v, r)| r <= 1e-10 * v.abs())
        },
    )?;
    Ok(ritz.iter().fold(0.0f64, |m, r| m.max(r.value.abs())))
}

fn check_same_region(a: &HamiltonianMatrix, b: &HamiltonianMatrix) -> Result<()> {
    if a.region != b.region {
        return Err(invalid("region", "operators must live on the same region"));
    }
    Ok(())
}

/// Residuals of the truncated Neumann series
/// `G = sum_{k <= K} (-G0 dW)^k G0` at every order up to `max_order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// `residuals[K] = ||G - sum_{k<=K} (-G0 dW)^k G0||_inf`.
    pub residuals: Vec<f64>,
    pub g0_norm_inf: f64,
    pub perturbation_norm_inf: f64,
    /// `||G0||_inf ||dW||_inf`, which bounds successive residual ratios.
    pub ratio_bound: f64,
}

/// Expansion of the resolvent of `full = base + dW` around `base`.
pub fn resolvent_expansion(
    full: &HamiltonianMatrix,
    base: &HamiltonianMatrix,
    energy: f64,
    max_order: usize,
) -> Result<ExpansionReport> {
    check_same_region(full, base)?;
    let g = green(full, energy)?.matrix;
    let g0 = green(base, energy)?.matrix;
    let dw = &full.to_dense() - &base.to_dense();
    let x = linalg::matmul(g0.as_ref(), dw.as_ref());
    let mut term = g0.clone();
    let mut sum = g0.clone();
    let mut residuals = vec![linalg::norm_inf((&g - &sum).as_ref())];
    for _ in 0..max_order {
        term = -linalg::matmul(x.as_ref(), term.as_ref());
        sum = &sum + &term;
        residuals.push(linalg::norm_inf((&g - &sum).as_ref()));
    }
    let g0n = linalg::norm_inf(g0.as_ref());
    let dwn = linalg::norm_inf(dw.as_ref());
    Ok(ExpansionReport { residuals, g0_norm_inf: g0n, perturbation_norm_inf: dwn, ratio_bound: g0n * dwn })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    /// `max |G(E) - G(l) - (E - l) G(E) G(l)|`.
    pub absolute: f64,
    /// The same, divided by the largest entry among the three terms.
    pub relative: f64,
}

/// First resolvent identity at two energies.
pub fn resolvent_identity(h: &HamiltonianMatrix, energy: f64, lambda: f64) -> Result<IdentityResidual> {
    let ge = green(h, energy)?.matrix;
    let gl = green(h, lambda)?.matrix;
    let prod = linalg::matmul(ge.as_ref(), gl.as_ref()) * faer::Scale(energy - lambda);
    let lhs = &(&ge - &gl) - &prod;
    let absolute = linalg::max_abs(lhs.as_ref());
    let scale = linalg::max_abs(ge.as_ref()).max(linalg::max_abs(gl.as_ref())).max(linalg::max_abs(prod.as_ref()));
    Ok(IdentityResidual { absolute, relative: absolute / scale })
}

/// Largest deviation in the Poisson formula
/// `psi(m) = -sum G_sub(m, m') H(m', m'') psi(m'')` over sub-region sites `m`,
/// interior boundary sites `m'` and exterior boundary sites `m''`, for a
/// solution `psi` of `(H - E) psi = 0` on the ambient region.
pub fn poisson_residual(h: &HamiltonianMatrix, energy: f64, psi: &[f64], sub: &Region) -> Result<f64> {
    if psi.len() != h.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), got: psi.len() });
    }
    let ambient = &h.region;
    let (_, exterior) = boundary_indices(ambient, sub)?;
    let idx: Vec<usize> = sub.sites().map(|s| ambient.index_of(s).expect("checked subset")).collect();
    let hs = h.principal(&idx);
    let eig = linalg::sym_eigenvalues(hs.as_ref())?;
    let dist = linalg::dist_to_spectrum(&eig, energy);
    let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if dist < SINGULAR_TOL * scale {
        return Err(Error::NearSingular { energy, distance: dist });
    }
    let gs = linalg::inverse(linalg::shifted(hs.as_ref(), energy).as_ref());
    let mut pos = vec![usize::MAX; h.len()];
    for (a, &i) in idx.iter().enumerate() {
        pos[i] = a;
    }
    let is_ext: Vec<bool> = {
        let mut v = vec![false; h.len()];
        exterior.iter().for_each(|&i| v[i] = true);
        v
    };
    // Boundary source f(m') = sum_{m''} H(m', m'') psi(m'') on interior sites.
    let mut source = vec![0.0; idx.len()];
    for &(i, k, v) in &h.edges {
        let (i, k) = (i as usize, k as usize);
        if pos[i] != usize::MAX && is_ext[k] {
            source[pos[i]] += v * psi[k];
        }
        if pos[k] != usize::MAX && is_ext[i] {
            source[pos[k]] += v * psi[i];
        }
    }
    let mut worst = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        let pred: f64 = -(0..idx.len()).map(|b| gs[(a, b)] * source[b]).sum::<f64>();
        worst = worst.max((psi[i] - pred).abs());
    }
    Ok(worst)
}

/// Schur complement of `H - E` onto `Lambda \ Lambda_*`:
/// `A = P(H - E)P - P H Q (Q(H - E)Q)^{-1} Q H P`.
#[derive(Clone, Debug)]
pub struct AuxiliaryMatrix {
    /// Indices (into the operator's region) of `Lambda \ Lambda_*`.
    pub complement: Vec<usize>,
    /// Indices of `Lambda_*`.
    pub star: Vec<usize>,
    pub matrix: Mat<f64>,
    pub theta: f64,
    pub energy: f64,
}

pub fn auxiliary_matrix(h: &HamiltonianMatrix, star: &Region, energy: f64) -> Result<AuxiliaryMatrix> {
    linalg::check_cap(h.len())?;
    let mut in_star = vec![false; h.len()];
    for s in star.sites() {
        in_star[h.region.index_of(s).ok_or(Error::NotSubset)?] = true;
    }
    let star_idx: Vec<usize> = (0..h.len()).filter(|&i| in_star[i]).collect();
    let comp: Vec<usize> = (0..h.len()).filter(|&i| !in_star[i]).collect();
    if comp.is_empty() {
        return Err(invalid("star", "must be a proper subset of the region"));
    }
    let full = linalg::shifted(h.to_dense().as_ref(), energy);
    let pick = |rows: &[usize], cols: &[usize]| Mat::<f64>::from_fn(rows.len(), cols.len(), |a, b| full[(rows[a], cols[b])]);
    let mut a = pick(&comp, &comp);
    if !star_idx.is_empty() {
        let qq = pick(&star_idx, &star_idx);
        let eig = linalg::sym_eigenvalues(qq.as_ref())?;
        let dist = linalg::dist_to_spectrum(&eig, 0.0);
        if dist < SINGULAR_TOL * eig.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
            return Err(Error::NearSingular { energy, distance: dist });
        }
        let gstar = linalg::inverse(qq.as_ref());
        let pq = pick(&comp, &star_idx);
        let t = linalg::matmul(gstar.as_ref(), pq.as_ref().transpose());
        a = &a - &linalg::matmul(pq.as_ref(), t.as_ref());
    }
    Ok(AuxiliaryMatrix { complement: comp, star: star_idx, matrix: a, theta: h.theta, energy })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub aux_inverse_norm: f64,
    pub green_norm: f64,
    /// `||A^{-1}|| <= c1 ||G||`.
    pub lower_ok: bool,
    /// `||G|| <= c2 e^{2 N0} ||A^{-1}||`.
    pub upper_ok: bool,
}

/// Two-sided comparison of `||A^{-1}||` with `||G_Lambda||`.
pub fn sandwich_check(aux: &AuxiliaryMatrix, g: &GreenFunction, n0: f64, c1: f64, c2: f64) -> Result<SandwichReport> {
    let eig = linalg::sym_eigenvalues(aux.matrix.as_ref())?;
    let dist = linalg::dist_to_spectrum(&eig, 0.0);
    let a_inv = if dist > 0.0 { 1.0 / dist } else { f64::INFINITY };
    Ok(SandwichReport {
        aux_inverse_norm: a_inv,
        green_norm: g.op_norm,
        lower_ok: a_inv <= c1 * g.op_norm,
        upper_ok: g.op_norm <= c2 * Float::exp(2.0 * n0) * a_inv,
    })
}

/// `max |G_Lambda(P, P) - A^{-1}|`; zero up to rounding.
pub fn schur_block_residual(aux: &AuxiliaryMatrix, g: &GreenFunction) -> f64 {
    let a_inv = linalg::inverse(aux.matrix.as_ref());
    let mut worst = 0.0f64;
    for (a, &i) in aux.complement.iter().enumerate() {
        for (b, &k) in aux.complement.iter().enumerate() {
            worst = worst.max((g.matrix[(i, k)] - a_inv[(a, b)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_box, SitePoint};
    use crate::operators::{assemble, Disorder, DisorderSample, FrequencyVector, Model, OperatorSpec};

    #[test]
    fn slab_and_dense_verdicts_agree() {
        let spec = OperatorSpec::new(1, 1, 0.2, 0.1, 0.5, Model::Schrodinger).unwrap();
        let region = make_box(&SitePoint::origin(1, 1), 6);
        let sample = DisorderSample::cube(Disorder::default(), 1, 6, 9).unwrap();
        let h = assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.1).unwrap();
        let th = Thresholds::new(6.0, 0.3, 0.5).unwrap();
        let slab = classify_operator(&h, 0.05, &th).unwrap();
        let dense = classify(&h, &green(&h, 0.05).unwrap(), &th);
        assert_eq!(slab.verdict, dense.verdict);
        assert!((slab.op_norm - dense.op_norm).abs() < 1e-8 * dense.op_norm);
        assert!((slab.gamma_fit - dense.gamma_fit).abs() < 1e-8);
        assert!((slab.decay_excess - dense.decay_excess).abs() < 1e-8);
    }

    #[test]
    fn log_matches_libm() {
        let mut x = 1e-300;
        while x < 1e300 {
            let exact = Float::ln(x);
            assert!((ln_positive(x) - exact).abs() <= 1e-15 * exact.abs().max(1.0), "{x}");
            x *= 1.37;
        }
    }

    #[test]
    fn single_site_green() {
        let spec = OperatorSpec::new(1, 1, 0.0, 0.0, 1.0, Model::Schrodinger).unwrap();
        let region = make_box(&SitePoint::origin(1, 1), 0);
        let sample = DisorderSample::from_values(Disorder::default(), vec![0], vec![0], vec![0.5]).unwrap();
        let h = assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.0).unwrap();
        let g = green(&h, 0.0).unwrap();
        assert!((g.matrix[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((g.op_norm - 2.0).abs() < 1e-15);
        assert!(matches!(green(&h, 0.5), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn free_chain_fit_recovers_rate() {
        // Constant diagonal 3 with unit hopping: G decays like e^{-acosh(3/2) |m-m'|}.
        let region = make_box(&SitePoint::new(vec![0], vec![]), 30);
        let mut h = HamiltonianMatrix { region: region.clone(), theta: 0.0, diag: vec![3.0; region.len()], edges: vec![] };
        for i in 0..60u32 {
            h.edges.push((i, i + 1, 1.0));
        }
        let g = green(&h, 0.0).unwrap();
        let th = Thresholds::new(60.0, 0.5, 0.5).unwrap();
        let rep = classify(&h, &g, &th);
        let rate = (1.5f64).acosh();
        assert!((rep.gamma_fit - rate).abs() < 0.05, "{}", rep.gamma_fit);
        assert_eq!(rep.verdict, Verdict::Good);
    }
}
