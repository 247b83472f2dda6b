//! Diophantine checks, Melnikov-type exclusion sets for the frequency vector,
//! and the census of resonant boxes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::SitePoint;
use crate::linalg;
use crate::operators::{DisorderSample, FrequencyVector, Model, OperatorSpec};
use crate::rng::trial_rng;
use crate::stats::{interval_union, mean_sd};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub a: f64,
    pub c: f64,
    /// Range cutoff for `n`.
    pub m: u32,
}

impl DiophantineParams {
    pub fn new(a: f64, c: f64, m: u32) -> Result<Self> {
        if !(a > 0.0) {
            return Err(invalid("A", "must be positive"));
        }
        if !(c > 0.0) {
            return Err(invalid("c", "must be positive"));
        }
        Ok(Self { a, c, m })
    }
}

/// Distance to the nearest integer.
pub fn torus_norm(x: f64) -> f64 {
    (x - Float::round(x)).abs()
}

/// Calls `f` on every `n` in `[-m, m]^nu` whose first non-zero entry is
/// positive (one representative of each `{n, -n}` pair).
fn for_each_half_space(nu: usize, m: i64, mut f: impl FnMut(&[i64])) {
    let mut n = vec![-m; nu];
    loop {
        if let Some(&first) = n.iter().find(|&&x| x != 0) {
            if first > 0 {
                f(&n);
            }
        }
        let mut axis = nu;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if n[axis] < m {
                n[axis] += 1;
                break;
            }
            n[axis] = -m;
        }
    }
}

/// First `n` in `[-M, M]^nu \ {0}` with `||n.omega|| < c / |n|^A`.
pub fn diophantine_witness(omega: &FrequencyVector, p: &DiophantineParams) -> Option<Vec<i64>> {
    let mut found = None;
    for_each_half_space(omega.nu(), p.m as i64, |n| {
        if found.is_none() {
            let norm: i64 = n.iter().map(|x| x.abs()).sum();
            if torus_norm(omega.dot(n)) < p.c / Float::powf(norm as f64, p.a) {
                found = Some(n.to_vec());
            }
        }
    });
    found
}

pub fn diophantine_check(omega: &FrequencyVector, p: &DiophantineParams) -> bool {
    diophantine_witness(omega, p).is_none()
}

/// `{omega : |m.omega + lambda| <= eta}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairConstraint {
    pub m: Vec<i64>,
    pub lambda: f64,
    pub eta: f64,
}

impl PairConstraint {
    pub fn value(&self, omega: &[f64]) -> f64 {
        self.m.iter().zip(omega).map(|(&k, w)| k as f64 * w).sum::<f64>() + self.lambda
    }

    pub fn contains(&self, omega: &[f64]) -> bool {
        self.value(omega).abs() <= self.eta
    }

    /// Whether the set meets `[0, 1]^nu`.
    pub fn reachable(&self) -> bool {
        let lo: i64 = self.m.iter().map(|&k| k.min(0)).sum();
        let hi: i64 = self.m.iter().map(|&k| k.max(0)).sum();
        let target = -self.lambda;
        target >= lo as f64 - self.eta && target <= hi as f64 + self.eta
    }

    /// The excluded interval for `nu = 1`, unclipped.
    pub fn interval(&self) -> (f64, f64) {
        let m = self.m[0] as f64;
        let (a, b) = ((-self.lambda - self.eta) / m, (-self.lambda + self.eta) / m);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// `{omega : |(m.w)(m'.w)((m - m').w) + (lambda m' - lambda' m).w| <= eta}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleConstraint {
    pub m: Vec<i64>,
    pub m2: Vec<i64>,
    pub lambda: f64,
    pub lambda2: f64,
    pub eta: f64,
}

fn dot(m: &[i64], w: &[f64]) -> f64 {
    m.iter().zip(w).map(|(&k, x)| k as f64 * x).sum()
}

impl TripleConstraint {
    pub fn value(&self, omega: &[f64]) -> f64 {
        let a = dot(&self.m, omega);
        let b = dot(&self.m2, omega);
        a * b * (a - b) + self.lambda * b - self.lambda2 * a
    }

    pub fn contains(&self, omega: &[f64]) -> bool {
        self.value(omega).abs() <= self.eta
    }

    /// Excluded intervals in `[0, 1]` for `nu = 1`. The cubic
    /// `A w^3 + B w` is split at its critical points into monotone pieces and
    /// each piece's preimage of `[-eta, eta]` is found by bisection.
    pub fn intervals_1d(&self) -> Vec<(f64, f64)> {
        let (m, m2) = (self.m[0] as f64, self.m2[0] as f64);
        let a = m * m2 * (m - m2);
        let b = self.lambda * m2 - self.lambda2 * m;
        let f = |w: f64| a * w * w * w + b * w;
        let mut cuts = vec![0.0, 1.0];
        if a != 0.0 && -b / a > 0.0 {
            let c = Float::sqrt(-b / (3.0 * a));
            if c > 0.0 && c < 1.0 {
                cuts.insert(1, c);
            }
        }
        let mut out = Vec::new();
        for win in cuts.windows(2) {
            if let Some(iv) = monotone_preimage(&f, win[0], win[1], -self.eta, self.eta) {
                out.push(iv);
            }
        }
        interval_union(out)
    }
}

/// `{x in [p, q] : lo <= f(x) <= hi}` for `f` monotone on `[p, q]`.
fn monotone_preimage(f: &impl Fn(f64) -> f64, p: f64, q: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let (fp, fq) = (f(p), f(q));
    let increasing = fq >= fp;
    let (fmin, fmax) = if increasing { (fp, fq) } else { (fq, fp) };
    if fmax < lo || fmin > hi {
        return None;
    }
    // First point where g crosses `level` on an increasing reparametrisation.
    let g = |x: f64| if increasing { f(x) } else { -f(x) };
    let (glo, ghi) = if increasing { (lo, hi) } else { (-hi, -lo) };
    let cross = |level: f64| -> f64 {
        let (mut a, mut b) = (p, q);
        if g(a) >= level {
            return a;
        }
        if g(b) <= level {
            return b;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if g(mid) < level {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let x0 = cross(glo);
    let x1 = cross(ghi);
    Some((x0.min(x1), x0.max(x1)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    Pair(PairConstraint),
    Triple(TripleConstraint),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    /// Exact union of intervals (`nu = 1`).
    IntervalUnion,
    /// Midpoint grid; the half-width is the rigorous bound
    /// `(number of constraints) / points`.
    Grid,
    /// Randomly shifted Kronecker lattices; 95% half-width over replicates.
    Qmc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub nu: usize,
    pub constraints: Vec<Constraint>,
    pub excluded_measure: f64,
    pub ci_halfwidth: f64,
    /// Connected components of the union (`nu = 1`), otherwise the number of
    /// non-empty constraint sets.
    pub component_count: usize,
    pub method: MeasureMethod,
    /// Largest single-constraint measure (exact methods only, else NaN).
    pub max_constraint_measure: f64,
    /// Reference scale for single-constraint measures.
    pub reference_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmcConfig {
    /// Total number of points over all replicates.
    pub points: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        Self { points: 1_000_000, replicates: 16, seed: 0x0DDC_0FFE }
    }
}

/// Two-sided 97.5% quantiles of Student's t for small degrees of freedom.
fn t975(dof: usize) -> f64 {
    const T: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
        2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= 30 {
        T[dof - 1]
    } else {
        crate::stats::Z95
    }
}

/// Generator of the Kronecker sequence based on the plastic-type number
/// `phi_nu`, the positive root of `x^{nu+1} = x + 1`.
fn kronecker_alpha(nu: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = Float::powf(1.0 + phi, 1.0 / (nu as f64 + 1.0));
    }
    (1..=nu).map(|k| (1.0 / Float::powi(phi, k as i32)).fract()).collect()
}

/// Estimated measure of `{w in [0,1]^nu : inside(w)}`.
pub fn qmc_measure(nu: usize, cfg: &QmcConfig, inside: impl Fn(&[f64]) -> bool + Sync + Send) -> (f64, f64) {
    let reps = cfg.replicates.max(2);
    let per = (cfg.points / reps).max(1);
    let alpha = kronecker_alpha(nu);
    let fractions = crate::par::map_indexed(reps, |r| {
        let mut rng = trial_rng(cfg.seed, &[r as u64]);
        let shift: Vec<f64> = (0..nu).map(|_| rng.random::<f64>()).collect();
        let mut x = vec![0.0; nu];
        let mut hits = 0usize;
        for i in 0..per {
            for k in 0..nu {
                x[k] = (shift[k] + (i as f64 + 1.0) * alpha[k]).fract();
            }
            if inside(&x) {
                hits += 1;
            }
        }
        hits as f64 / per as f64
    });
    let (mean, sd) = mean_sd(&fractions);
    (mean, t975(reps - 1) * sd / Float::sqrt(reps as f64))
}

/// `(m, [(lambda, eta)] sorted by lambda, largest eta)`.
type PairGroup = (Vec<i64>, Vec<(f64, f64)>, f64);

/// Pair constraints grouped by `m`.
struct PairIndex {
    groups: Vec<PairGroup>,
}

impl PairIndex {
    fn new(cs: &[PairConstraint]) -> Self {
        let mut map: BTreeMap<Vec<i64>, Vec<(f64, f64)>> = BTreeMap::new();
        for c in cs {
            map.entry(c.m.clone()).or_default().push((c.lambda, c.eta));
        }
        let groups = map
            .into_iter()
            .map(|(m, mut v)| {
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                let eta = v.iter().fold(0.0f64, |e, x| e.max(x.1));
                (m, v, eta)
            })
            .collect();
        Self { groups }
    }

    fn contains(&self, w: &[f64]) -> bool {
        for (m, lams, eta) in &self.groups {
            let target = -dot(m, w);
            let start = lams.partition_point(|x| x.0 < target - eta);
            for &(lam, e) in &lams[start..] {
                if lam > target + eta {
                    break;
                }
                if (lam - target).abs() <= e {
                    return true;
                }
            }
        }
        false
    }
}

/// Measure of the union of pair-constraint sets in `(0, 1]^nu`: exact for
/// `nu = 1`, QMC otherwise.
pub fn pair_exclusion(constraints: Vec<PairConstraint>, nu: usize, qmc: &QmcConfig, reference: f64) -> ExclusionReport {
    let constraints: Vec<PairConstraint> = constraints.into_iter().filter(|c| c.reachable()).collect();
    if nu == 1 {
        let ivs: Vec<(f64, f64)> =
            constraints.iter().map(|c| c.interval()).map(|(a, b)| (a.max(0.0), b.min(1.0))).filter(|(a, b)| a <= b).collect();
        let max_single = ivs.iter().fold(0.0f64, |m, (a, b)| m.max(b - a));
        let union = interval_union(ivs);
        return ExclusionReport {
            nu,
            excluded_measure: union.iter().map(|(a, b)| b - a).sum::<f64>().min(1.0),
            ci_halfwidth: 0.0,
            component_count: union.len(),
            method: MeasureMethod::IntervalUnion,
            max_constraint_measure: max_single,
            reference_bound: reference,
            constraints: constraints.into_iter().map(Constraint::Pair).collect(),
        };
    }
    let index = PairIndex::new(&constraints);
    let (value, ci) = qmc_measure(nu, qmc, |w| index.contains(w));
    ExclusionReport {
        nu,
        excluded_measure: value,
        ci_halfwidth: ci,
        component_count: constraints.len(),
        method: MeasureMethod::Qmc,
        max_constraint_measure: f64::NAN,
        reference_bound: reference,
        constraints: constraints.into_iter().map(Constraint::Pair).collect(),
    }
}

/// Grid estimate of a `nu = 1` pair exclusion on `points` midpoints, with
/// the rigorous half-width `(number of constraints) / points`.
pub fn pair_exclusion_grid(constraints: &[PairConstraint], points: usize) -> (f64, f64) {
    let cs: Vec<PairConstraint> = constraints.iter().filter(|c| c.reachable()).cloned().collect();
    let index = PairIndex::new(&cs);
    let hits = (0..points).filter(|&i| index.contains(&[(i as f64 + 0.5) / points as f64])).count();
    (hits as f64 / points as f64, cs.len() as f64 / points as f64)
}

/// `4 e^{-N0^sigma}`.
pub fn pair_threshold(n0: usize, sigma: f64) -> f64 {
    4.0 * Float::exp(-Float::powf(n0 as f64, sigma))
}

/// `e^{-N0^sigma / 2}`.
pub fn triple_threshold(n0: usize, sigma: f64) -> f64 {
    Float::exp(-0.5 * Float::powf(n0 as f64, sigma))
}

/// Pair constraints `|m.omega + mu - mu'| <= 4 e^{-N0^sigma}` for
/// `m in [-2N, 2N]^nu \ {0}` and eigenvalues `mu`, `mu'` taken from two
/// different boxes.
pub fn melnikov_pair_constraints(
    spectra: &[Vec<f64>],
    n: usize,
    n0: usize,
    sigma: f64,
    nu: usize,
    qmc: &QmcConfig,
) -> ExclusionReport {
    let eta = pair_threshold(n0, sigma);
    let mut lambdas = Vec::new();
    for a in 0..spectra.len() {
        for b in 0..spectra.len() {
            if a != b {
                for &x in &spectra[a] {
                    for &y in &spectra[b] {
                        lambdas.push(x - y);
                    }
                }
            }
        }
    }
    let mut cs = Vec::new();
    for_each_half_space(nu, 2 * n as i64, |m| {
        for &lambda in &lambdas {
            let c = PairConstraint { m: m.to_vec(), lambda, eta };
            if c.reachable() {
                cs.push(c);
            }
        }
    });
    pair_exclusion(cs, nu, qmc, eta)
}

/// Measure of the union of triple-constraint sets: bisection on the cubic for
/// `nu = 1`, QMC otherwise.
pub fn triple_exclusion(constraints: Vec<TripleConstraint>, nu: usize, qmc: &QmcConfig, reference: f64) -> ExclusionReport {
    if nu == 1 {
        let mut all = Vec::new();
        let mut max_single = 0.0f64;
        for c in &constraints {
            let ivs = c.intervals_1d();
            max_single = max_single.max(ivs.iter().map(|(a, b)| b - a).sum());
            all.extend(ivs);
        }
        let union = interval_union(all);
        return ExclusionReport {
            nu,
            excluded_measure: union.iter().map(|(a, b)| b - a).sum::<f64>().min(1.0),
            ci_halfwidth: 0.0,
            component_count: union.len(),
            method: MeasureMethod::IntervalUnion,
            max_constraint_measure: max_single,
            reference_bound: reference,
            constraints: constraints.into_iter().map(Constraint::Triple).collect(),
        };
    }
    let (value, ci) = qmc_measure(nu, qmc, |w| constraints.iter().any(|c| c.contains(w)));
    ExclusionReport {
        nu,
        excluded_measure: value,
        ci_halfwidth: ci,
        component_count: constraints.len(),
        method: MeasureMethod::Qmc,
        max_constraint_measure: f64::NAN,
        reference_bound: reference,
        constraints: constraints.into_iter().map(Constraint::Triple).collect(),
    }
}

/// Cubic constraints from three distinct boxes, with
/// `lambda = mu_b - mu_a`, `lambda' = mu_c - mu_a`, `m, m' in [-2N, 2N]^nu`,
/// `m, m' != 0`, `m != m'`. The per-constraint reference is `e^{-N0^sigma/6}`.
pub fn melnikov_triple_constraints(
    spectra: &[Vec<f64>],
    n: usize,
    n0: usize,
    sigma: f64,
    nu: usize,
    qmc: &QmcConfig,
) -> ExclusionReport {
    let eta = triple_threshold(n0, sigma);
    let mut ms: Vec<Vec<i64>> = Vec::new();
    let r = 2 * n as i64;
    for_each_half_space(nu, r, |m| {
        ms.push(m.to_vec());
        ms.push(m.iter().map(|x| -x).collect());
    });
    let mut cs = Vec::new();
    let k = spectra.len();
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                if a == b || b == c || a == c {
                    continue;
                }
                for &ma in &spectra[a] {
                    for &mb in &spectra[b] {
                        for &mc in &spectra[c] {
                            for m in &ms {
                                for m2 in &ms {
                                    if m != m2 {
                                        cs.push(TripleConstraint {
                                            m: m.clone(),
                                            m2: m2.clone(),
                                            lambda: mb - ma,
                                            lambda2: mc - ma,
                                            eta,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    triple_exclusion(cs, nu, qmc, Float::exp(-Float::powf(n0 as f64, sigma) / 6.0))
}

/// Spectra of the spatial blocks `eps Delta + V` on the windows
/// `[c - N0, c + N0]^d` for every window inside `[-N, N]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpectra {
    pub n0: usize,
    pub centers: Vec<Vec<i64>>,
    pub spectra: Vec<Vec<f64>>,
}

/// Sorted eigenvalues of `eps Delta + V` on the cube `[c - r, c + r]^d`.
pub fn spatial_block_spectrum(spec: &OperatorSpec, sample: &DisorderSample, center: &[i64], r: usize) -> Result<Vec<f64>> {
    let (m, _) = spatial_block(spec, sample, center, r)?;
    linalg::sym_eigenvalues(m.as_ref())
}

/// Dense `eps Delta + V` on the cube `[c - r, c + r]^d` (last axis fastest)
/// and the coordinates of its sites.
pub fn spatial_block(
    spec: &OperatorSpec,
    sample: &DisorderSample,
    center: &[i64],
    r: usize,
) -> Result<(faer::Mat<f64>, Vec<Vec<i64>>)> {
    let d = spec.d;
    let side = 2 * r + 1;
    let size = side.pow(d as u32);
    linalg::check_cap(size)?;
    let mut m = faer::Mat::<f64>::zeros(size, size);
    let mut coord = vec![0i64; d];
    let mut sites = Vec::with_capacity(size);
    for i in 0..size {
        let mut rest = i;
        for axis in (0..d).rev() {
            coord[axis] = center[axis] - r as i64 + (rest % side) as i64;
            rest /= side;
        }
        m[(i, i)] = sample.value(&coord).ok_or(crate::Error::WindowMismatch)?;
        sites.push(coord.clone());
        let mut stride = 1;
        for _ in 0..d {
            let local = (i / stride) % side;
            if local + 1 < side {
                m[(i, i + stride)] = spec.eps;
                m[(i + stride, i)] = spec.eps;
            }
            stride *= side;
        }
    }
    Ok((m, sites))
}

fn for_each_center(dim: usize, lo: i64, hi: i64, mut f: impl FnMut(&[i64])) {
    if lo > hi {
        return;
    }
    let mut c = vec![lo; dim];
    loop {
        f(&c);
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if c[axis] < hi {
                c[axis] += 1;
                break;
            }
            c[axis] = lo;
        }
    }
}

pub fn window_spectra(spec: &OperatorSpec, sample: &DisorderSample, n0: usize, n: usize) -> Result<WindowSpectra> {
    let reach = n as i64 - n0 as i64;
    let mut centers = Vec::new();
    for_each_center(spec.d, -reach, reach, |c| centers.push(c.to_vec()));
    let spectra = centers.iter().map(|c| spatial_block_spectrum(spec, sample, c, n0)).collect::<Result<Vec<_>>>()?;
    Ok(WindowSpectra { n0, centers, spectra })
}

/// A resonance `(n, mu)`: `mu` is an eigenvalue of the window centred at `window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub window: Vec<i64>,
    pub n: Vec<i64>,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadBox {
    pub center: SitePoint,
    pub witness: Resonance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadBoxCensus {
    pub bad: Vec<BadBox>,
    /// Indices into `bad` of a largest pairwise-disjoint family found.
    pub family: Vec<usize>,
    pub max_disjoint: usize,
    /// `false` when the search was cut short and `max_disjoint` is a lower bound.
    pub exact: bool,
}

fn resonance_value(model: Model, omega: &FrequencyVector, n: &[i64], theta: f64, mu: f64, energy: f64) -> f64 {
    crate::operators::phase_term(model, omega, n, theta) + mu - energy
}

/// Resonant `N0`-boxes inside `[-N, N]^{d+nu}`: a box is bad when some `n`
/// in its frequency range and eigenvalue `mu` of its spatial block satisfy
/// `|phase(n) + mu - E| < 2 e^{-N0^sigma}`.
pub fn census_with_spectra(
    model: Model,
    windows: &WindowSpectra,
    omega: &FrequencyVector,
    theta: f64,
    energy: f64,
    n: usize,
    sigma: f64,
) -> BadBoxCensus {
    let n0 = windows.n0 as i64;
    let nu = omega.nu();
    let thr = 0.5 * pair_threshold(windows.n0, sigma);
    let reach = n as i64 - n0;
    let mut bad = Vec::new();
    for (wi, c) in windows.centers.iter().enumerate() {
        let mus = &windows.spectra[wi];
        let mut resonant: Vec<(Vec<i64>, f64)> = Vec::new();
        for_each_center(nu, -(n as i64), n as i64, |k| {
            let phase = crate::operators::phase_term(model, omega, k, theta);
            let target = energy - phase;
            let idx = mus.partition_point(|&m| m < target);
            for j in [idx.wrapping_sub(1), idx] {
                if j < mus.len() && resonance_value(model, omega, k, theta, mus[j], energy).abs() < thr {
                    resonant.push((k.to_vec(), mus[j]));
                }
            }
        });
        if resonant.is_empty() {
            continue;
        }
        for_each_center(nu, -reach, reach, |cn| {
            let hit = resonant.iter().find(|(k, _)| k.iter().zip(cn).all(|(a, b)| (a - b).abs() <= n0));
            if let Some((k, mu)) = hit {
                bad.push(BadBox {
                    center: SitePoint::new(c.clone(), cn.to_vec()),
                    witness: Resonance { window: c.clone(), n: k.clone(), mu: *mu },
                });
            }
        });
    }
    let (family, exact) = max_disjoint_family(&bad, windows.n0);
    BadBoxCensus { max_disjoint: family.len(), family, bad, exact }
}

#[allow(clippy::too_many_arguments)]
pub fn census_bad_boxes(
    spec: &OperatorSpec,
    sample: &DisorderSample,
    omega: &FrequencyVector,
    theta: f64,
    energy: f64,
    n0: usize,
    n: usize,
    sigma: f64,
) -> Result<BadBoxCensus> {
    let windows = window_spectra(spec, sample, n0, n)?;
    Ok(census_with_spectra(spec.model, &windows, omega, theta, energy, n, sigma))
}

fn boxes_disjoint(a: &SitePoint, b: &SitePoint, n0: usize) -> bool {
    a.j.iter().chain(&a.n).zip(b.j.iter().chain(&b.n)).any(|(x, y)| (x - y).abs() > 2 * n0 as i64)
}

/// Largest family of pairwise-disjoint boxes by branch and bound. Cells of
/// side `2 N0 + 1`, anchored at the smallest centre coordinates, hold at most
/// one centre of a disjoint family, which gives the pruning bound. The search
/// is abandoned after a node budget.
fn max_disjoint_family(bad: &[BadBox], n0: usize) -> (Vec<usize>, bool) {
    let mut greedy: Vec<usize> = Vec::new();
    for i in 0..bad.len() {
        if greedy.iter().all(|&g| boxes_disjoint(&bad[g].center, &bad[i].center, n0)) {
            greedy.push(i);
        }
    }
    if greedy.len() <= 1 {
        // Greedy keeps the first box and scans all others against it, but a
        // disjoint pair elsewhere could still exist.
        let pair = (0..bad.len()).find_map(|i| {
            (i + 1..bad.len()).find(|&k| boxes_disjoint(&bad[i].center, &bad[k].center, n0)).map(|k| vec![i, k])
        });
        match pair {
            None => return (greedy, true),
            Some(p) => greedy = p,
        }
    }
    let side = 2 * n0 as i64 + 1;
    let coords = |p: &SitePoint| -> Vec<i64> { p.j.iter().chain(&p.n).copied().collect() };
    let dim = coords(&bad[0].center).len();
    let origin: Vec<i64> =
        (0..dim).map(|a| bad.iter().map(|b| coords(&b.center)[a]).min().unwrap_or(0)).collect();
    let mut keys: Vec<Vec<i64>> = bad
        .iter()
        .map(|b| coords(&b.center).iter().zip(&origin).map(|(x, o)| (x - o).div_euclid(side)).collect())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    if greedy.len() == sorted.len() {
        return (greedy, true);
    }
    let cells: Vec<usize> = keys.drain(..).map(|k| sorted.binary_search(&k).expect("cell key")).collect();
    let mut state = Search { bad, n0, cells: &cells, stamp: vec![0; sorted.len()], epoch: 0, budget: 2_000_000 };
    let mut best = greedy;
    let mut current = Vec::new();
    let candidates: Vec<usize> = (0..bad.len()).collect();
    let complete = state.run(&candidates, &mut current, &mut best);
    (best, complete)
}

struct Search<'a> {
    bad: &'a [BadBox],
    n0: usize,
    cells: &'a [usize],
    stamp: Vec<u64>,
    epoch: u64,
    budget: usize,
}

impl Search<'_> {
    fn distinct_cells(&mut self, candidates: &[usize]) -> usize {
        self.epoch += 1;
        let mut count = 0;
        for &i in candidates {
            let c = self.cells[i];
            if self.stamp[c] != self.epoch {
                self.stamp[c] = self.epoch;
                count += 1;
            }
        }
        count
    }

    fn run(&mut self, candidates: &[usize], current: &mut Vec<usize>, best: &mut Vec<usize>) -> bool {
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        if candidates.is_empty() {
            if current.len() > best.len() {
                *best = current.clone();
            }
            return true;
        }
        if current.len() + self.distinct_cells(candidates) <= best.len() {
            return true;
        }
        let first = candidates[0];
        let rest: Vec<usize> = candidates[1..]
            .iter()
            .copied()
            .filter(|&i| boxes_disjoint(&self.bad[first].center, &self.bad[i].center, self.n0))
            .collect();
        current.push(first);
        let ok_in = self.run(&rest, current, best);
        current.pop();
        let ok_out = self.run(&candidates[1..], current, best);
        ok_in && ok_out
    }
}

/// Whether the frequency vector satisfies the pair constraints built from a
/// disorder sample: for `m != 0`, no eigenvalues of any two windows with
/// `|m.omega + mu - mu'| <= 4 e^{-N0^sigma}`; for `m = 0`, no eigenvalues of
/// two disjoint windows closer than that threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairAcceptance {
    pub accepted: bool,
    pub separation_ok: bool,
    pub violations: usize,
    pub separation_violations: usize,
    pub threshold: f64,
}

pub fn pair_acceptance(windows: &WindowSpectra, omega: &FrequencyVector, n: usize, sigma: f64) -> PairAcceptance {
    let thr = pair_threshold(windows.n0, sigma);
    let mut all: Vec<(f64, usize)> = Vec::new();
    for (w, mus) in windows.spectra.iter().enumerate() {
        all.extend(mus.iter().map(|&m| (m, w)));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = all.iter().map(|x| x.0).collect();
    let n0 = windows.n0 as i64;
    let disjoint = |a: usize, b: usize| {
        windows.centers[a].iter().zip(&windows.centers[b]).any(|(x, y)| (x - y).abs() > 2 * n0)
    };
    let mut violations = 0usize;
    for_each_half_space(omega.nu(), 2 * n as i64, |m| {
        let s = omega.dot(m);
        for &(mu, _) in &all {
            // |s + mu - mu'| <= thr with mu' = mu + s +- thr.
            let lo = values.partition_point(|&v| v < mu + s - thr);
            let hi = values.partition_point(|&v| v <= mu + s + thr);
            violations += hi - lo;
        }
    });
    let mut separation_violations = 0usize;
    for i in 0..all.len() {
        for k in i + 1..all.len() {
            if all[k].0 - all[i].0 > thr {
                break;
            }
            if disjoint(all[i].1, all[k].1) {
                separation_violations += 1;
            }
        }
    }
    PairAcceptance {
        accepted: violations == 0 && separation_violations == 0,
        separation_ok: separation_violations == 0,
        violations,
        separation_violations,
        threshold: thr,
    }
}

/// Value of the cubic constraint generated by three resonances, with
/// `m = n_a - n_b`, `m' = n_a - n_c`, `lambda = mu_b - mu_a`, `lambda' = mu_c - mu_a`.
pub fn triple_witness(a: &Resonance, b: &Resonance, c: &Resonance, eta: f64) -> Option<TripleConstraint> {
    let m: Vec<i64> = a.n.iter().zip(&b.n).map(|(x, y)| x - y).collect();
    let m2: Vec<i64> = a.n.iter().zip(&c.n).map(|(x, y)| x - y).collect();
    if m.iter().all(|&x| x == 0) || m2.iter().all(|&x| x == 0) || m == m2 {
        return None;
    }
    Some(TripleConstraint { m, m2, lambda: b.mu - a.mu, lambda2: c.mu - a.mu, eta })
}
