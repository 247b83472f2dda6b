//! Small statistics helpers.

use alloc::vec::Vec;
use num_traits::Float;

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * Float::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    let lo = if k == 0 { 0.0 } else { Float::max(centre - half, 0.0) };
    let hi = if k as f64 == n { 1.0 } else { Float::min(centre + half, 1.0) };
    (lo, hi)
}

/// Sample mean and unbiased standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, Float::sqrt(ss / (n - 1) as f64))
}

/// Median of a slice (NaNs are ignored).
pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals.
    pub rms: f64,
    pub points: usize,
}

/// Accumulates points for a least-squares line, optionally grouped by `x`.
#[derive(Clone, Debug, Default)]
pub struct LineAccumulator {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl LineAccumulator {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.sxy += x * y;
        self.syy += y * y;
    }

    /// Adds `count` points at abscissa `x` with ordinate sum `sy` and sum of
    /// squares `syy`.
    pub fn push_grouped(&mut self, x: f64, count: f64, sy: f64, syy: f64) {
        self.n += count;
        self.sx += count * x;
        self.sy += sy;
        self.sxx += count * x * x;
        self.sxy += x * sy;
        self.syy += syy;
    }

    pub fn merge(&mut self, other: &LineAccumulator) {
        self.n += other.n;
        self.sx += other.sx;
        self.sy += other.sy;
        self.sxx += other.sxx;
        self.sxy += other.sxy;
        self.syy += other.syy;
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    /// `None` when fewer than two distinct abscissae were seen.
    pub fn fit(&self) -> Option<LineFit> {
        if self.n < 2.0 {
            return None;
        }
        let mx = self.sx / self.n;
        let my = self.sy / self.n;
        let cxx = self.sxx - self.n * mx * mx;
        if cxx <= 1e-12 * Float::max(self.sxx, 1.0) {
            return None;
        }
        let cxy = self.sxy - self.n * mx * my;
        let cyy = self.syy - self.n * my * my;
        let slope = cxy / cxx;
        let sse = Float::max(cyy - slope * cxy, 0.0);
        Some(LineFit { slope, intercept: my - slope * mx, rms: Float::sqrt(sse / self.n), points: self.n as usize })
    }
}

/// Least-squares fit of `ys` against `xs`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let mut acc = LineAccumulator::default();
    for (&x, &y) in xs.iter().zip(ys) {
        acc.push(x, y);
    }
    acc.fit()
}

/// Merges closed intervals; returns the disjoint union sorted by left end.
pub fn interval_union(mut ivs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    ivs.retain(|(a, b)| a <= b);
    ivs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ivs.len());
    for (a, b) in ivs {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = Float::max(last.1, b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Total length of a union of intervals clipped to `[lo, hi]`.
pub fn union_length(ivs: Vec<(f64, f64)>, lo: f64, hi: f64) -> f64 {
    let clipped = ivs.into_iter().map(|(a, b)| (Float::max(a, lo), Float::min(b, hi))).collect();
    interval_union(clipped).iter().map(|(a, b)| b - a).sum()
}
