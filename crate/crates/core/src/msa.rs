//! Scale ladders and the per-scale census of good and bad boxes.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frequency::{census_with_spectra, window_spectra};
use crate::greens::{classify_operator, Thresholds, Verdict};
use crate::lattice::{make_box, SitePoint};
use crate::linalg;
use crate::operators::{assemble, Disorder, DisorderSample, FrequencyVector, OperatorSpec};
use crate::rng::substream;
use crate::stats::{mean_sd, wilson, Z95};

/// Largest box, in sites, that a schedule may contain.
pub const SITE_CAP: usize = 100_000;

/// `floor(|ln(c delta)|^{1/sigma}) + 1`.
pub fn initial_scale(delta: f64, c: f64, sigma: f64) -> Result<usize> {
    let x = c * delta;
    if !(x > 0.0 && x < 1.0) {
        return Err(invalid("delta", "c * delta must lie in (0, 1)"));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma", "must lie in (0, 1)"));
    }
    Ok(Float::floor(Float::powf(Float::abs(Float::ln(x)), 1.0 / sigma)) as usize + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `N_{k+1} = floor(N_k^C) + 1`.
    Paper,
    /// `L_{k+1} = floor(L_k^alpha) + 1` with `alpha in (1, 2)`.
    Vdk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub n0: usize,
    pub exponent: f64,
    pub mode: ScheduleMode,
    pub sigma: f64,
    pub gamma0: f64,
    pub requested_levels: usize,
    pub scales: Vec<usize>,
}

impl ScaleSchedule {
    pub fn levels(&self) -> usize {
        self.scales.len()
    }

    /// Whether levels were dropped because of [`SITE_CAP`].
    pub fn truncated(&self) -> bool {
        self.scales.len() < self.requested_levels
    }
}

fn box_sites(scale: usize, dim: usize) -> f64 {
    Float::powi((2 * scale + 1) as f64, dim as i32)
}

/// Ladder starting at `n0`, keeping only the levels whose box in
/// `Z^{d+nu}` fits in [`SITE_CAP`].
pub fn schedule_from(
    n0: usize,
    exponent: f64,
    mode: ScheduleMode,
    levels: usize,
    dim: usize,
    sigma: f64,
    gamma0: f64,
) -> Result<ScaleSchedule> {
    match mode {
        ScheduleMode::Paper if !(exponent > 1.0) => return Err(invalid("C", "must exceed 1")),
        ScheduleMode::Vdk if !(exponent > 1.0 && exponent < 2.0) => {
            return Err(invalid("alpha", "must lie in (1, 2)"))
        }
        _ => {}
    }
    if levels == 0 {
        return Err(invalid("levels", "must be at least 1"));
    }
    if n0 == 0 {
        return Err(invalid("N0", "must be positive"));
    }
    let sites = box_sites(n0, dim);
    if sites > SITE_CAP as f64 {
        return Err(Error::ScheduleTooLarge { scale: n0, sites: sites as usize, cap: SITE_CAP });
    }
    let mut scales = vec![n0];
    while scales.len() < levels {
        let last = *scales.last().expect("non-empty") as f64;
        let next = Float::floor(Float::powf(last, exponent)) as usize + 1;
        if box_sites(next, dim) > SITE_CAP as f64 {
            break;
        }
        scales.push(next);
    }
    Ok(ScaleSchedule { n0, exponent, mode, sigma, gamma0, requested_levels: levels, scales })
}

/// Ladder with `N0` from [`initial_scale`].
#[allow(clippy::too_many_arguments)]
pub fn schedule(
    delta: f64,
    c: f64,
    sigma: f64,
    exponent: f64,
    levels: usize,
    mode: ScheduleMode,
    dim: usize,
    gamma0: f64,
) -> Result<ScaleSchedule> {
    schedule_from(initial_scale(delta, c, sigma)?, exponent, mode, levels, dim, sigma, gamma0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsaConfig {
    pub samples: usize,
    /// Number of uniform points in `[0, 1)`.
    pub theta_grid: usize,
    pub energy: f64,
    pub seed: u64,
    /// Per-level `(samples, theta_grid)` replacing the defaults above.
    #[serde(default)]
    pub per_scale: Vec<(usize, usize)>,
}

impl Default for MsaConfig {
    fn default() -> Self {
        Self { samples: 4, theta_grid: 512, energy: 0.0, seed: 0, per_scale: Vec::new() }
    }
}

impl MsaConfig {
    /// `(samples, theta_grid)` at a level.
    pub fn trials_at(&self, level: usize) -> (usize, usize) {
        self.per_scale.get(level).copied().unwrap_or((self.samples, self.theta_grid))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCensus {
    pub scale: usize,
    pub trials: usize,
    pub good: usize,
    pub good_fraction: f64,
    pub good_ci: (f64, f64),
    /// Boxes whose matrix `H - E` was numerically singular (counted as bad).
    pub singular: usize,
    pub gamma_mean: f64,
    pub gamma_sd: f64,
    /// Drop of the mean fitted rate relative to the previous scale (or to
    /// `gamma0` at the first scale).
    pub gamma_degradation: f64,
    /// Largest number of pairwise-disjoint resonant boxes of the previous
    /// scale inside one box of this scale, over all trials.
    pub max_disjoint_bad: usize,
}

/// One classified box in a census.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sample: usize,
    pub theta_index: usize,
    pub theta: f64,
    pub verdict: Verdict,
    pub op_norm: f64,
    pub gamma_fit: f64,
    pub decay_excess: f64,
    pub disjoint_bad: usize,
}

/// Per-scale census and the trial records behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRun {
    pub census: ScaleCensus,
    pub records: Vec<TrialRecord>,
}

/// Disorder sample `s` of a census, covering `[-r, r]^d`.
pub fn census_sample(spec: &OperatorSpec, disorder: Disorder, seed: u64, s: usize, r: usize) -> Result<DisorderSample> {
    DisorderSample::cube(disorder, spec.d, r as i64, substream(seed, &[s as u64]))
}

/// Classifies the box `Lambda_N(0)` for every disorder sample and every
/// `theta` on the grid, at every scale of the schedule.
pub fn msa_run(
    spec: &OperatorSpec,
    sched: &ScaleSchedule,
    omega: &FrequencyVector,
    cfg: &MsaConfig,
) -> Result<Vec<ScaleRun>> {
    spec.validate()?;
    if omega.nu() != spec.nu {
        return Err(Error::DimensionMismatch { expected: spec.nu, got: omega.nu() });
    }
    let levels = sched.scales.len();
    if (0..levels).any(|l| cfg.trials_at(l).0 == 0 || cfg.trials_at(l).1 == 0) {
        return Err(invalid("trials", "samples and theta_grid must be positive"));
    }
    let top = *sched.scales.last().expect("non-empty schedule");
    let most = (0..levels).map(|l| cfg.trials_at(l).0).max().unwrap_or(0);
    let samples: Vec<DisorderSample> =
        (0..most).map(|s| census_sample(spec, spec.disorder, cfg.seed, s, top)).collect::<Result<_>>()?;
    let mut out: Vec<ScaleRun> = Vec::new();
    let mut prev_gamma = sched.gamma0;
    for (level, &scale) in sched.scales.iter().enumerate() {
        let (n_samples, n_theta) = cfg.trials_at(level);
        let samples = &samples[..n_samples];
        let th = Thresholds::new(scale as f64, sched.gamma0, sched.sigma)?;
        let region = make_box(&SitePoint::origin(spec.d, spec.nu), scale as u32);
        let windows = if level > 0 {
            let below = sched.scales[level - 1];
            samples.iter().map(|s| window_spectra(spec, s, below, scale).map(Some)).collect::<Result<Vec<_>>>()?
        } else {
            vec![None; samples.len()]
        };
        let records = crate::par::map_indexed(n_samples * n_theta, |task| -> Result<TrialRecord> {
            let (s, t) = (task / n_theta, task % n_theta);
            let theta = t as f64 / n_theta as f64;
            let h = assemble(spec, &region, &samples[s], omega, theta)?;
            let report = match classify_operator(&h, cfg.energy, &th) {
                Ok(r) => Some(r),
                Err(Error::NearSingular { .. }) => None,
                Err(e) => return Err(e),
            };
            let disjoint_bad = windows[s].as_ref().map_or(0, |w| {
                census_with_spectra(spec.model, w, omega, theta, cfg.energy, scale, sched.sigma).max_disjoint
            });
            Ok(match report {
                Some(r) => TrialRecord {
                    sample: s,
                    theta_index: t,
                    theta,
                    verdict: r.verdict,
                    op_norm: r.op_norm,
                    gamma_fit: r.gamma_fit,
                    decay_excess: r.decay_excess,
                    disjoint_bad,
                },
                None => TrialRecord {
                    sample: s,
                    theta_index: t,
                    theta,
                    verdict: Verdict::Bad,
                    op_norm: f64::INFINITY,
                    gamma_fit: f64::NAN,
                    decay_excess: f64::INFINITY,
                    disjoint_bad,
                },
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let census = summarize(scale, &records, prev_gamma);
        prev_gamma = census.gamma_mean;
        out.push(ScaleRun { census, records });
    }
    Ok(out)
}

/// Aggregates trial records into a census.
pub fn summarize(scale: usize, records: &[TrialRecord], prev_gamma: f64) -> ScaleCensus {
    let trials = records.len();
    let good = records.iter().filter(|r| r.verdict == Verdict::Good).count();
    let singular = records.iter().filter(|r| r.op_norm.is_infinite()).count();
    let gammas: Vec<f64> = records.iter().map(|r| r.gamma_fit).filter(|g| g.is_finite()).collect();
    let (gamma_mean, gamma_sd) = if gammas.is_empty() { (f64::NAN, f64::NAN) } else { mean_sd(&gammas) };
    ScaleCensus {
        scale,
        trials,
        good,
        good_fraction: if trials == 0 { 0.0 } else { good as f64 / trials as f64 },
        good_ci: wilson(good, trials, Z95),
        singular,
        gamma_mean,
        gamma_sd,
        gamma_degradation: prev_gamma - gamma_mean,
        max_disjoint_bad: records.iter().map(|r| r.disjoint_bad).max().unwrap_or(0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub probability: f64,
    pub ci: (f64, f64),
    pub trials: usize,
    pub successes: usize,
    /// `p` in `1 - L^{-2p}` matched to the estimate (`+inf` when no failure).
    pub fitted_p: f64,
}

/// Whether the spatial box `[c - L, c + L]^d` of `eps Delta + V` is
/// `(m, E)`-regular: `E` is at least `tol` from the spectrum and
/// `|G(x, y)| <= e^{-m |x - y|}` whenever `|x - y| > L / 4`.
pub fn is_regular(
    spec: &OperatorSpec,
    sample: &DisorderSample,
    center: &[i64],
    l: usize,
    m_rate: f64,
    energy: f64,
    tol: f64,
) -> Result<bool> {
    let (dense, sites) = crate::frequency::spatial_block(spec, sample, center, l)?;
    let eig = linalg::sym_eigenvalues(dense.as_ref())?;
    if linalg::dist_to_spectrum(&eig, energy) < tol {
        return Ok(false);
    }
    let g = linalg::inverse(linalg::shifted(dense.as_ref(), energy).as_ref());
    let window = l as f64 / 4.0;
    for k in 0..sites.len() {
        for i in 0..k {
            let dist = crate::lattice::l1(&sites[i], &sites[k]) as f64;
            if dist > window && !(g[(i, k)].abs() <= Float::exp(-m_rate * dist)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Monte Carlo estimate of the probability that, for every energy in
/// `energies`, at least one of two spatial boxes of radius `L` at distance
/// `> 2L` is regular.
pub fn regularity_probability(
    spec: &OperatorSpec,
    l: usize,
    m_rate: f64,
    energies: &[f64],
    tol: f64,
    trials: usize,
    seed: u64,
) -> Result<RegularityEstimate> {
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    if energies.is_empty() {
        return Err(invalid("energies", "must not be empty"));
    }
    let offset = 2 * l as i64 + 1;
    let a = vec![-(offset / 2) - l as i64; spec.d];
    let mut b = a.clone();
    b[0] += 2 * l as i64 + offset;
    let ok = crate::par::map_indexed(trials, |t| -> Result<bool> {
        let lo: Vec<i64> = a.iter().map(|x| x - l as i64).collect();
        let hi: Vec<i64> = b.iter().zip(&a).map(|(x, y)| x.max(y) + l as i64).collect();
        let sample = DisorderSample::draw(spec.disorder, lo, hi, substream(seed, &[t as u64]))?;
        for &e in energies {
            if !is_regular(spec, &sample, &a, l, m_rate, e, tol)? && !is_regular(spec, &sample, &b, l, m_rate, e, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let successes = ok.iter().filter(|&&x| x).count();
    let probability = successes as f64 / trials as f64;
    let fitted_p = if successes == trials || l < 2 {
        f64::INFINITY
    } else {
        -Float::ln(1.0 - probability) / (2.0 * Float::ln(l as f64))
    };
    Ok(RegularityEstimate { probability, ci: wilson(successes, trials, Z95), trials, successes, fitted_p })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleResonance {
    pub trials: usize,
    /// Large box at `theta = 0` with `||G|| >= e^{C N}` at `E`.
    pub resonant: usize,
    /// Small j-disjoint box bad at `E`.
    pub bad: usize,
    pub joint: usize,
    pub joint_frequency: f64,
    /// Product of the two marginal frequencies.
    pub product: f64,
    /// Standard error of the joint frequency under independence.
    pub product_se: f64,
}

/// Frequency of the event that the box `Lambda_{Nbar}(0)` is resonant at `E`
/// while a small box `Lambda_N` whose spatial projection misses the large
/// one is bad at `E`.
#[allow(clippy::too_many_arguments)]
pub fn double_resonance_probe(
    spec: &OperatorSpec,
    omega: &FrequencyVector,
    n: usize,
    n_bar: usize,
    c_bar: f64,
    th: &Thresholds,
    energy: f64,
    trials: usize,
    seed: u64,
) -> Result<DoubleResonance> {
    if n_bar < n {
        return Err(invalid("N_bar", "must be at least N"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let big = make_box(&SitePoint::origin(spec.d, spec.nu), n_bar as u32);
    let mut j = vec![0i64; spec.d];
    j[0] = (n_bar + n + 1) as i64;
    let small = make_box(&SitePoint::new(j, vec![0; spec.nu]), n as u32);
    let window = Float::exp(-c_bar * n as f64);
    let outcomes = crate::par::map_indexed(trials, |t| -> Result<(bool, bool)> {
        let mut lo = vec![-(n_bar as i64); spec.d];
        let mut hi = vec![n_bar as i64; spec.d];
        lo[0] = -(n_bar as i64);
        hi[0] = (n_bar + 2 * n + 1) as i64;
        for k in 1..spec.d {
            lo[k] = -(n_bar as i64);
            hi[k] = n_bar as i64;
        }
        let sample = DisorderSample::draw(spec.disorder, lo, hi, substream(seed, &[t as u64]))?;
        let hb = assemble(spec, &big, &sample, omega, 0.0)?;
        let below = |x: f64| linalg::count_below(&hb, x);
        let resonant = match (below(energy - window), below(energy + window)) {
            (Ok(a), Ok(b)) => b > a,
            (Err(Error::NearSingular { .. }), _) | (_, Err(Error::NearSingular { .. })) => true,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let hs = assemble(spec, &small, &sample, omega, 0.0)?;
        let bad = match classify_operator(&hs, energy, th) {
            Ok(r) => r.verdict == Verdict::Bad,
            Err(Error::NearSingular { .. }) => true,
            Err(e) => return Err(e),
        };
        Ok((resonant, bad))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let resonant = outcomes.iter().filter(|o| o.0).count();
    let bad = outcomes.iter().filter(|o| o.1).count();
    let joint = outcomes.iter().filter(|o| o.0 && o.1).count();
    let nt = trials as f64;
    let product = (resonant as f64 / nt) * (bad as f64 / nt);
    Ok(DoubleResonance {
        trials,
        resonant,
        bad,
        joint,
        joint_frequency: joint as f64 / nt,
        product,
        product_se: Float::sqrt(product * (1.0 - product) / nt),
    })
}
