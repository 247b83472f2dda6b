//! Wegner-type estimates, bad-set measures and eigenvalue separation.

use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frequency::spatial_block_spectrum;
use crate::greens::{classify_operator, Thresholds, Verdict};
use crate::lattice::Region;
use crate::linalg;
use crate::operators::{assemble, DisorderSample, FrequencyVector, Model, OperatorSpec};
use crate::rng::substream;
use crate::stats::{interval_union, wilson, Z95};

/// Constant in the `theta` Wegner bound `C kappa |Lambda|`.
pub const WEGNER_THETA_C: f64 = 2.0;
/// Constant in the disorder Wegner bound `C kappa |Lambda| ||g||_inf`.
pub const WEGNER_X_C: f64 = 4.0;
/// Fewer Monte Carlo trials than this make the interval unreliable.
pub const MIN_RELIABLE_TRIALS: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// 95% half-width; zero for exact computations.
    pub ci_halfwidth: f64,
    pub trials: usize,
    pub bound: f64,
    pub pass: bool,
    /// `false` when the interval rests on too few trials.
    pub reliable: bool,
}

impl MeasureEstimate {
    pub fn new(value: f64, ci_halfwidth: f64, trials: usize, bound: f64) -> Self {
        Self {
            value,
            ci_halfwidth,
            trials,
            bound,
            pass: value - ci_halfwidth <= bound,
            reliable: trials >= MIN_RELIABLE_TRIALS,
        }
    }

    /// Binomial estimate with a Wilson interval.
    pub fn binomial(hits: usize, trials: usize, bound: f64) -> Self {
        let value = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let (lo, hi) = wilson(hits, trials, Z95);
        Self::new(value, (value - lo).max(hi - value), trials, bound)
    }
}

fn reject_wave(spec: &OperatorSpec) -> Result<()> {
    if spec.model == Model::Wave {
        return Err(Error::WaveModelRejected);
    }
    Ok(())
}

/// `mes{theta in range : dist(E, spec H(theta)) <= kappa}`. Since
/// `H(theta + s) = H(theta) + s`, the set is a union of intervals of
/// half-width `kappa` around `E - lambda_i(theta_0) + theta_0`, so the value is exact.
#[allow(clippy::too_many_arguments)]
pub fn wegner_theta(
    spec: &OperatorSpec,
    region: &Region,
    sample: &DisorderSample,
    omega: &FrequencyVector,
    energy: f64,
    kappa: f64,
    theta_range: (f64, f64),
) -> Result<MeasureEstimate> {
    reject_wave(spec)?;
    if !(kappa > 0.0) {
        return Err(invalid("kappa", "must be positive"));
    }
    let (a, b) = theta_range;
    if !(b > a) {
        return Err(invalid("theta_range", "must be a non-empty interval"));
    }
    let h = assemble(spec, region, sample, omega, a)?;
    let eig = linalg::eigenvalues(&h)?;
    let ivs: Vec<(f64, f64)> = eig
        .iter()
        .map(|&l| {
            let c = a + energy - l;
            ((c - kappa).max(a), (c + kappa).min(b))
        })
        .filter(|(lo, hi)| lo < hi)
        .collect();
    let value: f64 = interval_union(ivs).iter().map(|(lo, hi)| hi - lo).sum();
    Ok(MeasureEstimate::new(value, 0.0, 0, WEGNER_THETA_C * kappa * region.len() as f64))
}

/// Probability over the disorder that `dist(E, spec H(theta)) <= kappa`.
#[allow(clippy::too_many_arguments)]
pub fn wegner_x(
    spec: &OperatorSpec,
    region: &Region,
    omega: &FrequencyVector,
    theta: f64,
    energy: f64,
    kappa: f64,
    trials: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    if !(kappa >= 0.0) {
        return Err(invalid("kappa", "must be non-negative"));
    }
    let (lo, hi) = region.bounding_box();
    let d = spec.d;
    let hits = crate::par::map_indexed(trials, |t| -> Result<bool> {
        if kappa == 0.0 {
            return Ok(false);
        }
        let sample = DisorderSample::draw(spec.disorder, lo[..d].to_vec(), hi[..d].to_vec(), substream(seed, &[t as u64]))?;
        let h = assemble(spec, region, &sample, omega, theta)?;
        let eig = linalg::eigenvalues(&h)?;
        Ok(linalg::dist_to_spectrum(&eig, energy) <= kappa)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let k = hits.iter().filter(|&&x| x).count();
    let bound = WEGNER_X_C * kappa * region.len() as f64 * spec.disorder.density_sup();
    Ok(MeasureEstimate::binomial(k, trials, bound))
}

/// Largest of `|N(theta, E + kappa) - N(theta - kappa, E)|` and
/// `|N(theta, E - kappa) - N(theta + kappa, E)|`, with `N` counting
/// eigenvalues `<= E`.
#[allow(clippy::too_many_arguments)]
pub fn counting_shift_check(
    spec: &OperatorSpec,
    region: &Region,
    sample: &DisorderSample,
    omega: &FrequencyVector,
    theta: f64,
    energy: f64,
    kappa: f64,
) -> Result<usize> {
    reject_wave(spec)?;
    let count = |t: f64, e: f64| -> Result<usize> {
        let h = assemble(spec, region, sample, omega, t)?;
        Ok(linalg::count_at_most(&linalg::eigenvalues(&h)?, e))
    };
    let a = count(theta, energy + kappa)?.abs_diff(count(theta - kappa, energy)?);
    let b = count(theta, energy - kappa)?.abs_diff(count(theta + kappa, energy)?);
    Ok(a.max(b))
}

/// Fraction of a uniform `theta` grid on `[0, 1)` where the box is bad.
/// The bound `e^{-N^{sigma/2}}` is informational.
#[allow(clippy::too_many_arguments)]
pub fn badset_measure_theta(
    spec: &OperatorSpec,
    region: &Region,
    sample: &DisorderSample,
    omega: &FrequencyVector,
    energy: f64,
    th: &Thresholds,
    grid: usize,
) -> Result<MeasureEstimate> {
    if grid == 0 {
        return Err(invalid("grid", "must be positive"));
    }
    let bad = crate::par::map_indexed(grid, |t| -> Result<bool> {
        let h = assemble(spec, region, sample, omega, t as f64 / grid as f64)?;
        is_bad(&h, energy, th)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let k = bad.iter().filter(|&&x| x).count();
    Ok(MeasureEstimate::binomial(k, grid, asymptotic_bound(th)))
}

fn is_bad(h: &crate::operators::HamiltonianMatrix, energy: f64, th: &Thresholds) -> Result<bool> {
    match classify_operator(h, energy, th) {
        Ok(r) => Ok(r.verdict == Verdict::Bad),
        Err(Error::NearSingular { .. }) => Ok(true),
        Err(e) => Err(e),
    }
}

fn asymptotic_bound(th: &Thresholds) -> f64 {
    Float::exp(-Float::powf(th.scale, th.sigma / 2.0))
}

/// Probability over the disorder that the box is bad at fixed `theta`.
#[allow(clippy::too_many_arguments)]
pub fn badset_probability_x(
    spec: &OperatorSpec,
    region: &Region,
    omega: &FrequencyVector,
    theta: f64,
    energy: f64,
    th: &Thresholds,
    trials: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    let (lo, hi) = region.bounding_box();
    let d = spec.d;
    let bad = crate::par::map_indexed(trials, |t| -> Result<bool> {
        let sample = DisorderSample::draw(spec.disorder, lo[..d].to_vec(), hi[..d].to_vec(), substream(seed, &[t as u64]))?;
        let h = assemble(spec, region, &sample, omega, theta)?;
        is_bad(&h, energy, th)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let k = bad.iter().filter(|&&x| x).count();
    Ok(MeasureEstimate::binomial(k, trials, asymptotic_bound(th)))
}

/// Exponent `p` in `P ~ N^{-p}` by least squares on `(ln N, ln P)`;
/// points with zero probability are skipped.
pub fn fit_scale_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|(_, p)| *p > 0.0).map(|&(n, p)| (Float::ln(n), Float::ln(p))).unzip();
    crate::stats::fit_line(&xs, &ys).map(|f| -f.slope)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationSummary {
    pub l: usize,
    pub beta: f64,
    /// `e^{-L^beta}`.
    pub threshold: f64,
    pub trials: usize,
    pub violations: usize,
    pub probability: f64,
    pub ci: (f64, f64),
    /// Sorted minimum distances, one per trial.
    pub distances: Vec<f64>,
}

impl SeparationSummary {
    /// Empirical `P(min distance <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.distances.partition_point(|&x| x <= t) as f64 / self.trials.max(1) as f64
    }
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `P(min |a_i - b_k| > t)` for two independent sets of `k` uniform points
/// on an interval of length `len`. Conditioning on the number `R` of runs
/// in the merged labelling, the `R - 1` gaps between runs must all exceed `t`,
/// which by exchangeability of spacings has probability `(1 - (R-1) t / len)_+^{2k}`.
pub fn separation_survival(k: u64, t: f64, len: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let total = choose(2 * k, k);
    let mut p = 0.0;
    for runs in 2..=2 * k {
        let h = runs / 2;
        let ways = if runs % 2 == 0 {
            2.0 * choose(k - 1, h - 1) * choose(k - 1, h - 1)
        } else {
            2.0 * choose(k - 1, h) * choose(k - 1, h - 1)
        };
        let free = (1.0 - (runs - 1) as f64 * t / len).max(0.0);
        p += ways / total * Float::powi(free, 2 * k as i32);
    }
    p
}

/// Smallest `|a_i - b_k|` between two sorted lists.
pub fn min_gap(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut k) = (0, 0);
    let mut best = f64::INFINITY;
    while i < a.len() && k < b.len() {
        best = best.min((a[i] - b[k]).abs());
        if a[i] < b[k] {
            i += 1;
        } else {
            k += 1;
        }
    }
    best
}

/// Distribution of the distance between the spectra of `eps Delta + V` on
/// two cubes of radius `L` whose centres differ by `offset` along the first
/// axis.
pub fn eigenvalue_separation(
    spec: &OperatorSpec,
    l: usize,
    offset: i64,
    trials: usize,
    beta: f64,
    seed: u64,
) -> Result<SeparationSummary> {
    if offset.unsigned_abs() as usize <= 2 * l {
        return Err(Error::OverlappingBoxes);
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let a = alloc::vec![0i64; spec.d];
    let mut b = a.clone();
    b[0] = offset;
    let r = l as i64;
    let mut lo = alloc::vec![-r; spec.d];
    let mut hi = alloc::vec![r; spec.d];
    lo[0] = offset.min(0) - r;
    hi[0] = offset.max(0) + r;
    let mut distances = crate::par::map_indexed(trials, |t| -> Result<f64> {
        let sample = DisorderSample::draw(spec.disorder, lo.clone(), hi.clone(), substream(seed, &[t as u64]))?;
        let sa = spatial_block_spectrum(spec, &sample, &a, l)?;
        let sb = spatial_block_spectrum(spec, &sample, &b, l)?;
        Ok(min_gap(&sa, &sb))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    distances.sort_by(f64::total_cmp);
    let threshold = Float::exp(-Float::powf(l as f64, beta));
    let violations = distances.partition_point(|&x| x < threshold);
    Ok(SeparationSummary {
        l,
        beta,
        threshold,
        trials,
        violations,
        probability: violations as f64 / trials as f64,
        ci: wilson(violations, trials, Z95),
        distances,
    })
}
