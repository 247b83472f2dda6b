//! Eigenpairs of finite-volume operators and localization diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{l1, Region, SitePoint};
use crate::linalg::{self, lanczos, Slab, SlabResolvent};
use crate::operators::{assemble, DisorderSample, FrequencyVector, HamiltonianMatrix, OperatorSpec};
use crate::rng::substream;
use crate::stats::fit_line;

/// Amplitudes below this are treated as numerical noise by the decay fit.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Default participation-ratio threshold, in sites.
pub const PR_THRESHOLD: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Site of largest amplitude.
    pub loc_center: SitePoint,
    /// Rate fitted along the spatial directions; `+inf` for a vector
    /// concentrated on one shell.
    pub decay_rate: f64,
    /// `1 / sum |psi|^4`.
    pub participation: f64,
    /// `||H v - value v||`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Distance measured in the spatial coordinates only.
    J,
    /// Full l1 distance on `Z^{d+nu}`.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub residual: f64,
    /// Number of shells used by the fit.
    pub shells: usize,
}

fn make_pair(h: &HamiltonianMatrix, value: f64, vector: Vec<f64>) -> EigenPair {
    let mut y = vec![0.0; vector.len()];
    h.apply(&vector, &mut y);
    let residual = Float::sqrt(y.iter().zip(&vector).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>());
    let (imax, _) = vector.iter().enumerate().fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
    let loc_center = h.region.site_point(imax);
    let participation = 1.0 / vector.iter().map(|x| x.powi(4)).sum::<f64>();
    let decay_rate = decay_profile_at(&h.region, &vector, imax, Direction::J).map(|f| f.rate).unwrap_or(f64::NAN);
    EigenPair { value, vector, loc_center, decay_rate, participation, residual }
}

/// Full spectrum with eigenvectors, sorted by value.
pub fn eigensolve(h: &HamiltonianMatrix) -> Result<Vec<EigenPair>> {
    linalg::check_cap(h.len())?;
    let (values, vecs) = linalg::sym_eigen(h.to_dense().as_ref())?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(k, &v)| make_pair(h, v, (0..h.len()).map(|i| vecs[(i, k)]).collect()))
        .collect())
}

/// Eigenpairs with values in `[lo, hi]`. Small operators are diagonalised
/// densely; larger boxes use Lanczos on `(H - c)^{-1}` with `c` the window
/// centre, and the number of eigenvalues expected is fixed by inertia.
pub fn eigensolve_window(h: &HamiltonianMatrix, lo: f64, hi: f64) -> Result<Vec<EigenPair>> {
    if !(hi > lo) {
        return Err(invalid("window", "needs lo < hi"));
    }
    if h.len() <= crate::DENSE_CAP {
        return Ok(eigensolve(h)?.into_iter().filter(|p| p.value >= lo && p.value <= hi).collect());
    }
    let slab = Slab::from_box(h).ok_or(Error::CapExceeded { sites: h.len(), cap: crate::DENSE_CAP })?;
    let _ftz = linalg::FlushDenormals::new();
    let expected = slab.inertia_below(hi)? - slab.inertia_below(lo)?;
    if expected == 0 {
        return Ok(Vec::new());
    }
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let res = SlabResolvent::new(&slab, centre)?;
    let norm = h.norm_bound();
    let inside = |mu: f64| mu != 0.0 && (1.0 / mu).abs() <= half * (1.0 + 1e-12);
    let ritz = lanczos(
        h.len(),
        |x, y| y.copy_from_slice(&res.solve(x)),
        h.len(),
        10,
        |pairs| {
            // Residual of the inverse maps to `r / mu^2` on H.
            pairs.iter().filter(|&&(mu, r)| inside(mu) && r / (mu * mu) < 1e-11 * norm).count() >= expected
        },
    )?;
    let mut out: Vec<EigenPair> = ritz
        .into_iter()
        .filter(|r| inside(r.value))
        .map(|r| {
            let mut v = r.vector;
            let nv = Float::sqrt(v.iter().map(|x| x * x).sum::<f64>());
            v.iter_mut().for_each(|x| *x /= nv);
            let mut hv = vec![0.0; v.len()];
            h.apply(&v, &mut hv);
            let value: f64 = hv.iter().zip(&v).map(|(a, b)| a * b).sum();
            make_pair(h, value, v)
        })
        .filter(|p| p.value >= lo && p.value <= hi)
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

fn distance(region: &Region, a: usize, b: usize, dir: Direction) -> usize {
    let (x, y) = (region.site(a), region.site(b));
    match dir {
        Direction::All => l1(x, y) as usize,
        Direction::J => l1(&x[..region.d()], &y[..region.d()]) as usize,
    }
}

fn decay_profile_at(region: &Region, v: &[f64], centre: usize, dir: Direction) -> Result<DecayFit> {
    let mut shells: Vec<f64> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let r = distance(region, centre, i, dir);
        if shells.len() <= r {
            shells.resize(r + 1, 0.0);
        }
        shells[r] = shells[r].max(x.abs());
    }
    let peak = shells[0];
    let (xs, ys): (Vec<f64>, Vec<f64>) = shells
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > NOISE_FLOOR * peak)
        .map(|(r, &m)| (r as f64, Float::ln(m)))
        .unzip();
    if xs.len() < 2 {
        return Ok(DecayFit { rate: f64::INFINITY, residual: 0.0, shells: xs.len() });
    }
    if xs.len() < 4 {
        return Err(invalid("vector", "support spans fewer than 4 distinct radii"));
    }
    let fit = fit_line(&xs, &ys).ok_or(Error::NoConvergence)?;
    Ok(DecayFit { rate: -fit.slope, residual: fit.rms, shells: xs.len() })
}

/// Exponential rate of the shell maxima of `|psi|` around the localization
/// centre. Shells below [`NOISE_FLOOR`] relative to the peak are ignored; a
/// vector on a single shell has rate `+inf`.
pub fn decay_profile(pair: &EigenPair, region: &Region, dir: Direction) -> Result<DecayFit> {
    let centre = region.index_of(&pair.loc_center.coords()).ok_or(Error::NotSubset)?;
    decay_profile_at(region, &pair.vector, centre, dir)
}

/// `|psi(m)| <= 1 + |m|^c` at every site of the region.
pub fn schnol_bound_check(pair: &EigenPair, region: &Region, c: f64) -> bool {
    pair.vector.iter().enumerate().all(|(i, &x)| {
        let m: i64 = region.site(i).iter().map(|v| v.abs()).sum();
        x.abs() <= 1.0 + Float::powf(m as f64, c)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSummary {
    pub samples: usize,
    pub pairs: usize,
    pub localized: usize,
    pub fraction: f64,
    pub gamma_min: f64,
    pub pr_threshold: f64,
    pub mean_rate: f64,
    pub mean_participation: f64,
}

/// Fraction of eigenpairs in `window` with spatial decay rate at least
/// `gamma_min` and participation ratio at most `pr_threshold`, over
/// independent disorder samples.
#[allow(clippy::too_many_arguments)]
pub fn localization_census(
    spec: &OperatorSpec,
    samples: usize,
    region: &Region,
    omega: &FrequencyVector,
    theta: f64,
    window: (f64, f64),
    gamma_min: f64,
    pr_threshold: f64,
    seed: u64,
) -> Result<LocalizationSummary> {
    let records = localization_pairs(spec, samples, region, omega, theta, window, seed)?;
    Ok(summarize_localization(&records, samples, gamma_min, pr_threshold))
}

/// One eigenpair of a localization census.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub sample: usize,
    pub value: f64,
    pub loc_center: SitePoint,
    pub decay_rate: f64,
    pub participation: f64,
}

/// Eigenpairs in `window` for each disorder sample, in sample order.
pub fn localization_pairs(
    spec: &OperatorSpec,
    samples: usize,
    region: &Region,
    omega: &FrequencyVector,
    theta: f64,
    window: (f64, f64),
    seed: u64,
) -> Result<Vec<PairRecord>> {
    let (lo, hi) = region.bounding_box();
    let d = spec.d;
    let per = crate::par::map_indexed(samples, |s| -> Result<Vec<PairRecord>> {
        let sample = DisorderSample::draw(spec.disorder, lo[..d].to_vec(), hi[..d].to_vec(), substream(seed, &[s as u64]))?;
        let h = assemble(spec, region, &sample, omega, theta)?;
        Ok(eigensolve_window(&h, window.0, window.1)?
            .into_iter()
            .map(|p| PairRecord {
                sample: s,
                value: p.value,
                loc_center: p.loc_center,
                decay_rate: p.decay_rate,
                participation: p.participation,
            })
            .collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn summarize_localization(records: &[PairRecord], samples: usize, gamma_min: f64, pr_threshold: f64) -> LocalizationSummary {
    let localized = records.iter().filter(|r| r.decay_rate >= gamma_min && r.participation <= pr_threshold).count();
    let finite: Vec<f64> = records.iter().map(|r| r.decay_rate).filter(|r| r.is_finite()).collect();
    let mean = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let prs: Vec<f64> = records.iter().map(|r| r.participation).collect();
    LocalizationSummary {
        samples,
        pairs: records.len(),
        localized,
        fraction: if records.is_empty() { 1.0 } else { localized as f64 / records.len() as f64 },
        gamma_min,
        pr_threshold,
        mean_rate: mean(&finite),
        mean_participation: mean(&prs),
    }
}
