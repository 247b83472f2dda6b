//! Operator specification, disorder samples and assembly of the finite-volume
//! quasi-energy matrices.
//!
//! Schrödinger: `H(theta) = diag(n.omega + theta) + eps*Delta_j + V + sum_k W_k(j) Delta_{n_k}`.
//! Wave: the same with `(n.omega + theta)^2` on the diagonal.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Region, SitePoint};
use crate::rng::{coord_key, trial_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Schrodinger,
    Wave,
}

/// Single-site distribution of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Disorder {
    Uniform { lo: f64, hi: f64 },
}

impl Default for Disorder {
    fn default() -> Self {
        Disorder::Uniform { lo: -1.0, hi: 1.0 }
    }
}

impl Disorder {
    /// Parses `uniform` or `uniform(a,b)`.
    pub fn from_descriptor(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "uniform" {
            return Ok(Self::default());
        }
        if let Some(inner) = t.strip_prefix("uniform(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() == 2 {
                if let (Ok(lo), Ok(hi)) = (parts[0].trim().parse::<f64>(), parts[1].trim().parse::<f64>()) {
                    let g = Disorder::Uniform { lo, hi };
                    g.validate()?;
                    return Ok(g);
                }
            }
        }
        Err(Error::UnsupportedDistribution(s.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Disorder::Uniform { lo, hi } => {
                if !(lo < hi) || lo < -1.0 || hi > 1.0 {
                    return Err(invalid("disorder", "uniform support must be a proper subinterval of [-1, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Disorder::Uniform { lo, hi } => (lo, hi),
        }
    }

    /// Supremum of the density.
    pub fn density_sup(&self) -> f64 {
        match *self {
            Disorder::Uniform { lo, hi } => 1.0 / (hi - lo),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Disorder::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Disorder::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }

    /// Quantile function.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Disorder::Uniform { lo, hi } => lo + (hi - lo) * u,
        }
    }
}

/// Spatial profile of the time-periodic coupling `W_k(j) = delta * w_k * exp(-b|j|)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum DriveProfile {
    /// `w_k = 1` for every frequency.
    #[default]
    Exponential,
    /// Per-frequency weights with `sum |w_k| <= 2 nu`.
    Weighted { weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub d: usize,
    pub nu: usize,
    pub eps: f64,
    pub delta: f64,
    pub b: f64,
    pub model: Model,
    #[serde(default)]
    pub disorder: Disorder,
    #[serde(default)]
    pub drive: DriveProfile,
}

impl OperatorSpec {
    pub fn new(d: usize, nu: usize, eps: f64, delta: f64, b: f64, model: Model) -> Result<Self> {
        let spec = Self { d, nu, eps, delta, b, model, disorder: Disorder::default(), drive: DriveProfile::Exponential };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if self.nu == 0 {
            return Err(invalid("nu", "must be at least 1"));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(invalid("eps", "must be finite and non-negative"));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(invalid("delta", "must be finite and non-negative"));
        }
        if !(self.b > 0.0) {
            return Err(invalid("b", "must be positive"));
        }
        self.disorder.validate()?;
        if let DriveProfile::Weighted { weights } = &self.drive {
            if weights.len() != self.nu {
                return Err(invalid("drive", "one weight per frequency is required"));
            }
            let total: f64 = weights.iter().map(|w| w.abs()).sum();
            if total > 2.0 * self.nu as f64 + 1e-12 {
                return Err(invalid("drive", "sum of |w_k| exceeds 2 nu"));
            }
        }
        Ok(())
    }

    fn drive_weight(&self, k: usize) -> f64 {
        match &self.drive {
            DriveProfile::Exponential => 1.0,
            DriveProfile::Weighted { weights } => weights[k],
        }
    }

    /// Coupling `W_k(j)` between `n` and `n + e_k`.
    pub fn drive_coupling(&self, k: usize, j: &[i64]) -> f64 {
        let norm: i64 = j.iter().map(|c| c.abs()).sum();
        self.delta * self.drive_weight(k) * Float::exp(-self.b * norm as f64)
    }

    /// `sup_j sum_k |W_k(j)|`.
    pub fn drive_sup(&self) -> f64 {
        (0..self.nu).map(|k| self.delta * self.drive_weight(k).abs()).sum()
    }
}

/// Frequency vector in `(0, 1]^nu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyVector(Vec<f64>);

impl TryFrom<Vec<f64>> for FrequencyVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        FrequencyVector::new(v)
    }
}

impl From<FrequencyVector> for Vec<f64> {
    fn from(f: FrequencyVector) -> Vec<f64> {
        f.0
    }
}

impl FrequencyVector {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(invalid("omega", "needs at least one component"));
        }
        if omega.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(invalid("omega", "components must lie in (0, 1]"));
        }
        Ok(Self(omega))
    }

    /// Fractional parts of square roots of the first non-square integers
    /// (`sqrt 2, sqrt 3, sqrt 5, ...`), starting after `skip` of them.
    /// Quadratic irrationals are badly approximable.
    pub fn quadratic_irrational(nu: usize, skip: usize) -> Self {
        let mut out = Vec::with_capacity(nu);
        let mut k = 2u64;
        let mut seen = 0;
        while out.len() < nu {
            let r = Float::sqrt(k as f64);
            if r.fract() != 0.0 {
                if seen >= skip {
                    out.push(r.fract());
                }
                seen += 1;
            }
            k += 1;
        }
        Self(out)
    }

    /// `(sqrt 5 - 1) / 2`.
    pub fn golden() -> Self {
        Self(vec![(Float::sqrt(5.0) - 1.0) / 2.0])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn nu(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, n: &[i64]) -> f64 {
        self.0.iter().zip(n).map(|(w, &k)| w * k as f64).sum()
    }
}

/// Potential values on a rectangular spatial window. Each site's value is the
/// first draw of a ChaCha8 stream keyed by the seed and the site, so two
/// windows with the same seed agree on their overlap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSample {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub seed: u64,
    pub disorder: Disorder,
    values: Vec<f64>,
}

impl DisorderSample {
    pub fn draw(disorder: Disorder, lo: Vec<i64>, hi: Vec<i64>, seed: u64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("window", "bounds must have equal, non-zero length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(invalid("window", "lower corner exceeds upper corner"));
        }
        disorder.validate()?;
        let mut values = Vec::new();
        let mut x = lo.clone();
        loop {
            values.push(disorder.quantile(site_uniform(seed, &x)));
            let mut axis = x.len();
            let done = loop {
                if axis == 0 {
                    break true;
                }
                axis -= 1;
                if x[axis] < hi[axis] {
                    x[axis] += 1;
                    break false;
                }
                x[axis] = lo[axis];
            };
            if done {
                break;
            }
        }
        Ok(Self { lo, hi, seed, disorder, values })
    }

    /// Cube `[-r, r]^d`.
    pub fn cube(disorder: Disorder, d: usize, r: i64, seed: u64) -> Result<Self> {
        Self::draw(disorder, vec![-r; d], vec![r; d], seed)
    }

    /// Window with prescribed values, in lexicographic order.
    pub fn from_values(disorder: Disorder, lo: Vec<i64>, hi: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        let count: i64 = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).product();
        if count < 0 || count as usize != values.len() {
            return Err(invalid("values", "length does not match the window"));
        }
        Ok(Self { lo, hi, seed: 0, disorder, values })
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: &[i64]) -> Option<f64> {
        if j.len() != self.lo.len() {
            return None;
        }
        let mut idx = 0i64;
        for i in 0..j.len() {
            if j[i] < self.lo[i] || j[i] > self.hi[i] {
                return None;
            }
            idx = idx * (self.hi[i] - self.lo[i] + 1) + (j[i] - self.lo[i]);
        }
        Some(self.values[idx as usize])
    }
}

fn site_uniform(seed: u64, j: &[i64]) -> f64 {
    let mut rng = trial_rng(seed, &[coord_key(j)]);
    rng.random::<f64>()
}

/// Sparse symmetric matrix of a quasi-energy operator restricted to a region.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    pub region: Region,
    pub theta: f64,
    pub diag: Vec<f64>,
    /// Upper-triangle entries `(i, k, value)` with `i < k`.
    pub edges: Vec<(u32, u32, f64)>,
}

impl HamiltonianMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.len();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for &(i, k, v) in &self.edges {
            m[(i as usize, k as usize)] = v;
            m[(k as usize, i as usize)] = v;
        }
        m
    }

    /// `y = H x`.
    pub fn apply<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + core::ops::Mul<f64, Output = T> + core::ops::AddAssign,
    {
        for i in 0..self.len() {
            y[i] = x[i] * self.diag[i];
        }
        for &(i, k, v) in &self.edges {
            let (i, k) = (i as usize, k as usize);
            y[i] += x[k] * v;
            y[k] += x[i] * v;
        }
    }

    /// Entry `(i, k)`, searching the edge list.
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        if i == k {
            return self.diag[i];
        }
        let (a, b) = if i < k { (i as u32, k as u32) } else { (k as u32, i as u32) };
        self.edges.iter().find(|e| e.0 == a && e.1 == b).map_or(0.0, |e| e.2)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let mut row: Vec<f64> = self.diag.iter().map(|d| d.abs()).collect();
        for &(i, k, v) in &self.edges {
            row[i as usize] += v.abs();
            row[k as usize] += v.abs();
        }
        row.into_iter().fold(0.0, f64::max)
    }

    /// Restriction to the given site indices (in the given order).
    pub fn principal(&self, idx: &[usize]) -> Mat<f64> {
        let mut pos = vec![usize::MAX; self.len()];
        for (a, &i) in idx.iter().enumerate() {
            pos[i] = a;
        }
        let mut m = Mat::<f64>::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            m[(a, a)] = self.diag[i];
        }
        for &(i, k, v) in &self.edges {
            let (pi, pk) = (pos[i as usize], pos[k as usize]);
            if pi != usize::MAX && pk != usize::MAX {
                m[(pi, pk)] = v;
                m[(pk, pi)] = v;
            }
        }
        m
    }
}

/// Diagonal shift `n.omega + theta` or its square.
pub fn phase_term(model: Model, omega: &FrequencyVector, n: &[i64], theta: f64) -> f64 {
    let s = omega.dot(n) + theta;
    match model {
        Model::Schrodinger => s,
        Model::Wave => s * s,
    }
}

/// Assembles `H(theta)` on `region` with the potential from `sample`.
pub fn assemble(
    spec: &OperatorSpec,
    region: &Region,
    sample: &DisorderSample,
    omega: &FrequencyVector,
    theta: f64,
) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    if region.d() != spec.d || region.nu() != spec.nu {
        return Err(Error::DimensionMismatch { expected: spec.d + spec.nu, got: region.dim() });
    }
    if omega.nu() != spec.nu {
        return Err(Error::DimensionMismatch { expected: spec.nu, got: omega.nu() });
    }
    if sample.d() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: sample.d() });
    }
    let d = spec.d;
    let len = region.len();
    let mut diag = Vec::with_capacity(len);
    for s in region.sites() {
        let v = sample.value(&s[..d]).ok_or(Error::WindowMismatch)?;
        diag.push(phase_term(spec.model, omega, &s[d..], theta) + v);
    }
    let mut edges = Vec::new();
    let mut probe = Vec::with_capacity(region.dim());
    for i in 0..len {
        let x = region.site(i);
        for axis in 0..region.dim() {
            probe.clear();
            probe.extend_from_slice(x);
            probe[axis] += 1;
            if let Some(k) = region.index_of(&probe) {
                let w = if axis < d { spec.eps } else { spec.drive_coupling(axis - d, &x[..d]) };
                if w != 0.0 {
                    let (a, b) = if i < k { (i, k) } else { (k, i) };
                    edges.push((a as u32, b as u32, w));
                }
            }
        }
    }
    edges.sort_by_key(|e| (e.0, e.1));
    Ok(HamiltonianMatrix { region: region.clone(), theta, diag, edges })
}

/// Result of checking the spectrum against the a-priori enclosure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub allowed: (f64, f64),
    pub observed: (f64, f64),
    pub violations: usize,
    pub pass: bool,
}

/// Checks that every eigenvalue lies in the hull of the diagonal phase terms
/// plus `supp g`, widened by `2 d eps + 2 sup_j sum_k |W_k(j)|`.
pub fn spectrum_support_check(
    spec: &OperatorSpec,
    region: &Region,
    samples: &[DisorderSample],
    omega: &FrequencyVector,
    theta: f64,
) -> Result<SupportReport> {
    let d = spec.d;
    let (glo, ghi) = spec.disorder.support();
    let (mut plo, mut phi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in region.sites() {
        let p = phase_term(spec.model, omega, &s[d..], theta);
        plo = plo.min(p);
        phi = phi.max(p);
    }
    let widen = 2.0 * d as f64 * spec.eps + 2.0 * spec.drive_sup();
    let allowed = (plo + glo - widen, phi + ghi + widen);
    let tol = 1e-10 * (1.0 + allowed.0.abs().max(allowed.1.abs()));
    let (mut olo, mut ohi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut violations = 0;
    for sample in samples {
        let h = assemble(spec, region, sample, omega, theta)?;
        let eig = crate::linalg::eigenvalues(&h)?;
        for &e in &eig {
            olo = olo.min(e);
            ohi = ohi.max(e);
            if e < allowed.0 - tol || e > allowed.1 + tol {
                violations += 1;
            }
        }
    }
    Ok(SupportReport { allowed, observed: (olo, ohi), violations, pass: violations == 0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difference {
    Forward,
    Central,
}

/// Largest entrywise deviation between a finite-difference `dH/dtheta` and the
/// exact derivative (`I` for Schrödinger, `2 diag(n.omega + theta)` for wave).
pub fn theta_derivative_check(
    spec: &OperatorSpec,
    region: &Region,
    sample: &DisorderSample,
    omega: &FrequencyVector,
    theta: f64,
    h: f64,
    scheme: Difference,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h", "step must be positive"));
    }
    let (a, b, scale) = match scheme {
        Difference::Forward => (theta, theta + h, h),
        Difference::Central => (theta - h, theta + h, 2.0 * h),
    };
    let ha = assemble(spec, region, sample, omega, a)?;
    let hb = assemble(spec, region, sample, omega, b)?;
    let d = spec.d;
    let mut worst = 0.0f64;
    for (i, s) in region.sites().enumerate() {
        let fd = (hb.diag[i] - ha.diag[i]) / scale;
        let exact = match spec.model {
            Model::Schrodinger => 1.0,
            Model::Wave => 2.0 * (omega.dot(&s[d..]) + theta),
        };
        worst = worst.max((fd - exact).abs());
    }
    for (ea, eb) in ha.edges.iter().zip(&hb.edges) {
        worst = worst.max(((eb.2 - ea.2) / scale).abs());
    }
    Ok(worst)
}

/// Human-readable summary used in logs.
pub fn describe(spec: &OperatorSpec) -> String {
    alloc::format!(
        "{:?} d={} nu={} eps={} delta={} b={}",
        spec.model, spec.d, spec.nu, spec.eps, spec.delta, spec.b
    )
}

/// Spatial window `[c - r, c + r]` covering the `j`-projection of a box.
pub fn window_for(center: &SitePoint, radius: u32) -> (Vec<i64>, Vec<i64>) {
    let r = radius as i64;
    (center.j.iter().map(|c| c - r).collect(), center.j.iter().map(|c| c + r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_box;

    fn spec1() -> OperatorSpec {
        OperatorSpec::new(1, 1, 0.1, 0.05, 1.0, Model::Schrodinger).unwrap()
    }

    #[test]
    fn single_site_diagonal() {
        let spec = spec1();
        let omega = FrequencyVector::new(vec![0.3]).unwrap();
        let region = make_box(&SitePoint::new(vec![0], vec![2]), 0);
        let sample = DisorderSample::from_values(Disorder::default(), vec![0], vec![0], vec![0.25]).unwrap();
        let h = assemble(&spec, &region, &sample, &omega, 0.1).unwrap();
        assert_eq!(h.len(), 1);
        assert!((h.diag[0] - (2.0 * 0.3 + 0.1 + 0.25)).abs() < 1e-15);
        assert!(h.edges.is_empty());
    }

    #[test]
    fn hopping_weights() {
        let spec = spec1();
        let omega = FrequencyVector::golden();
        let region = make_box(&SitePoint::origin(1, 1), 1);
        let sample = DisorderSample::cube(Disorder::default(), 1, 1, 3).unwrap();
        let h = assemble(&spec, &region, &sample, &omega, 0.0).unwrap();
        // (j, n) = (-1, 0) and (0, 0) are spatial neighbours.
        assert_eq!(h.entry(1, 4), 0.1);
        // (1, -1) and (1, 0) are coupled by W(1) = delta e^{-1}.
        assert!((h.entry(6, 7) - 0.05 * (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(h.entry(0, 8), 0.0);
        assert_eq!(h.edges.len(), 12);
    }

    #[test]
    fn window_mismatch_and_parse_errors() {
        let spec = spec1();
        let region = make_box(&SitePoint::origin(1, 1), 3);
        let sample = DisorderSample::cube(Disorder::default(), 1, 2, 1).unwrap();
        let r = assemble(&spec, &region, &sample, &FrequencyVector::golden(), 0.0);
        assert_eq!(r, Err(Error::WindowMismatch));
        assert!(matches!(Disorder::from_descriptor("gaussian"), Err(Error::UnsupportedDistribution(_))));
        assert_eq!(Disorder::from_descriptor("uniform(-0.5, 0.5)").unwrap(), Disorder::Uniform { lo: -0.5, hi: 0.5 });
        assert!(OperatorSpec::new(1, 1, 0.1, 0.1, 0.0, Model::Wave).is_err());
    }

    #[test]
    fn windows_agree_on_overlap() {
        let a = DisorderSample::cube(Disorder::default(), 2, 3, 11).unwrap();
        let b = DisorderSample::draw(Disorder::default(), vec![1, -2], vec![6, 5], 11).unwrap();
        assert_eq!(a.value(&[2, 3]), b.value(&[2, 3]));
        assert_eq!(a.value(&[1, -2]), b.value(&[1, -2]));
    }

    #[test]
    fn quadratic_irrationals() {
        let w = FrequencyVector::quadratic_irrational(2, 0);
        assert!((w.as_slice()[0] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((w.as_slice()[1] - (3f64.sqrt() - 1.0)).abs() < 1e-15);
    }
}
