//! Time evolution of the driven equations on a spatial window, transport
//! diagnostics, and the comparison with the lifted autonomous operator.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::operators::{DisorderSample, FrequencyVector, OperatorSpec};

/// `sum_k W_k(j) cos 2 pi (omega_k t + theta_k)`.
pub fn drive_value(spec: &OperatorSpec, omega: &FrequencyVector, theta: &[f64], t: f64, j: &[i64]) -> f64 {
    (0..spec.nu)
        .map(|k| spec.drive_coupling(k, j) * Float::cos(2.0 * PI * (omega.as_slice()[k] * t + theta[k])))
        .sum()
}

/// `int_{t0}^{t1}` of [`drive_value`].
pub fn drive_integral(spec: &OperatorSpec, omega: &FrequencyVector, theta: &[f64], t0: f64, t1: f64, j: &[i64]) -> f64 {
    (0..spec.nu)
        .map(|k| {
            let w = omega.as_slice()[k];
            let s = |t: f64| Float::sin(2.0 * PI * (w * t + theta[k]));
            spec.drive_coupling(k, j) / (2.0 * PI * w) * (s(t1) - s(t0))
        })
        .sum()
}

/// Amplitudes on the spatial window `[lo, hi]` (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
    pub norm0: f64,
}

impl WavePacket {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(invalid("window", "needs lo <= hi on every axis"));
        }
        let size: usize = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).product();
        if amplitudes.len() != size {
            return Err(Error::DimensionMismatch { expected: size, got: amplitudes.len() });
        }
        let norm0 = norm(&amplitudes);
        Ok(Self { lo, hi, amplitudes, time: 0.0, norm0 })
    }

    /// Unit amplitude at `site` on the cube `[-r, r]^d`.
    pub fn site(d: usize, r: i64, site: &[i64]) -> Result<Self> {
        let mut p = Self::new(vec![-r; d], vec![r; d], vec![Complex64::new(0.0, 0.0); (2 * r as usize + 1).pow(d as u32)])?;
        let i = p.index(site).ok_or(Error::WindowMismatch)?;
        p.amplitudes[i] = Complex64::new(1.0, 0.0);
        p.norm0 = 1.0;
        Ok(p)
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    fn sides(&self) -> Vec<usize> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).collect()
    }

    pub fn index(&self, j: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..self.d() {
            if j[k] < self.lo[k] || j[k] > self.hi[k] {
                return None;
            }
            idx = idx * (self.hi[k] - self.lo[k] + 1) as usize + (j[k] - self.lo[k]) as usize;
        }
        Some(idx)
    }

    /// Coordinates of every site, in storage order.
    pub fn sites(&self) -> Vec<Vec<i64>> {
        let sides = self.sides();
        (0..self.len())
            .map(|mut i| {
                let mut c = vec![0i64; self.d()];
                for k in (0..self.d()).rev() {
                    c[k] = self.lo[k] + (i % sides[k]) as i64;
                    i /= sides[k];
                }
                c
            })
            .collect()
    }

    /// Storage indices of the sites on the outer shell of the window.
    pub fn boundary(&self) -> Vec<usize> {
        self.sites()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().enumerate().any(|(k, &x)| x == self.lo[k] || x == self.hi[k]))
            .map(|(i, _)| i)
            .collect()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    Float::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `sum |j|^2 |psi_j|^2 / ||psi||^2`.
    pub second_moment: Vec<f64>,
    /// Largest second moment over every step up to each sample time.
    pub running_sup: Vec<f64>,
    /// `|<psi(0), psi(t)>|^2 / ||psi(0)||^4`.
    pub return_prob: Vec<f64>,
    /// `| ||psi(t)|| - ||psi(0)|| |` (Schrödinger); relative change of the
    /// quadratic invariant (wave).
    pub norm_drift: Vec<f64>,
    /// Largest boundary weight seen.
    pub boundary_weight: f64,
    /// First time the boundary weight exceeded the tolerance, when the run
    /// was asked to stop there instead of failing.
    pub leak_time: Option<f64>,
}

impl Trajectory {
    /// Running supremum at the last sample time `<= t`.
    pub fn sup_until(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t + 1e-9);
        if k == 0 {
            0.0
        } else {
            self.running_sup[k - 1]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Number of log-spaced sample times.
    pub samples: usize,
    /// Times that are always sampled.
    pub checkpoints: Vec<f64>,
    /// Largest tolerated boundary weight `sum_{boundary} |psi|^2`.
    pub leak_tol: f64,
    /// Stop at the first leak instead of returning an error.
    pub stop_on_leak: bool,
    /// Budget for the splitting error estimate `dt^2 ||A|| ||D||`.
    pub step_budget: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt: 0.05, samples: 200, checkpoints: Vec::new(), leak_tol: 1e-16, stop_on_leak: false, step_budget: 0.05 }
    }
}

/// Step indices sampled by a run of `steps` steps.
fn sample_steps(steps: usize, dt: f64, opts: &EvolveOptions) -> Vec<usize> {
    let mut out = vec![0usize, steps];
    if steps > 0 && opts.samples > 1 {
        let ln_max = Float::ln(steps as f64);
        for i in 0..opts.samples {
            let x = Float::exp(ln_max * i as f64 / (opts.samples - 1) as f64);
            out.push(Float::round(x) as usize);
        }
    }
    for &t in &opts.checkpoints {
        let s = Float::round(t / dt) as usize;
        if s <= steps {
            out.push(s);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `exp(-i tau eps A)` for the nearest-neighbour chain of length `m` with
/// open ends, through its sine eigenbasis.
struct ChainPropagator {
    m: usize,
    basis: Vec<f64>,
    energies: Vec<f64>,
}

impl ChainPropagator {
    fn new(m: usize) -> Self {
        let scale = Float::sqrt(2.0 / (m as f64 + 1.0));
        let mut basis = vec![0.0; m * m];
        for k in 0..m {
            for x in 0..m {
                basis[k * m + x] = scale * Float::sin(PI * ((k + 1) * (x + 1)) as f64 / (m as f64 + 1.0));
            }
        }
        let energies = (0..m).map(|k| 2.0 * Float::cos(PI * (k + 1) as f64 / (m as f64 + 1.0))).collect();
        Self { m, basis, energies }
    }

    /// Applies `exp(-i phase_k)` in the eigenbasis with `phase_k = c * e_k`.
    fn apply(&self, re: &mut [f64], im: &mut [f64], c: f64, buf: &mut [f64]) {
        let m = self.m;
        let (cr, ci) = buf.split_at_mut(m);
        // Forward transform; the sine matrix is symmetric and orthogonal.
        for k in 0..m {
            let row = &self.basis[k * m..(k + 1) * m];
            let (mut a, mut b) = (0.0, 0.0);
            for x in 0..m {
                a += row[x] * re[x];
                b += row[x] * im[x];
            }
            let (s, cphi) = Float::sin_cos(c * self.energies[k]);
            cr[k] = a * cphi + b * s;
            ci[k] = b * cphi - a * s;
        }
        for x in 0..m {
            let (mut a, mut b) = (0.0, 0.0);
            for k in 0..m {
                let v = self.basis[k * m + x];
                a += v * cr[k];
                b += v * ci[k];
            }
            re[x] = a;
            im[x] = b;
        }
    }
}

/// Kinetic flow `exp(-i tau eps Delta)` on a box window, axis by axis.
struct Kinetic {
    sides: Vec<usize>,
    chains: Vec<ChainPropagator>,
}

impl Kinetic {
    fn new(sides: &[usize]) -> Self {
        Self { sides: sides.to_vec(), chains: sides.iter().map(|&m| ChainPropagator::new(m)).collect() }
    }

    fn apply(&self, re: &mut [f64], im: &mut [f64], c: f64) {
        if c == 0.0 {
            return;
        }
        let total: usize = self.sides.iter().product();
        let mut stride = 1usize;
        for axis in (0..self.sides.len()).rev() {
            let m = self.sides[axis];
            let mut lr = vec![0.0; m];
            let mut li = vec![0.0; m];
            let mut buf = vec![0.0; 2 * m];
            for start in 0..total {
                if (start / stride) % m != 0 {
                    continue;
                }
                for x in 0..m {
                    lr[x] = re[start + x * stride];
                    li[x] = im[start + x * stride];
                }
                self.chains[axis].apply(&mut lr, &mut li, c, &mut buf);
                for x in 0..m {
                    re[start + x * stride] = lr[x];
                    im[start + x * stride] = li[x];
                }
            }
            stride *= m;
        }
    }
}

fn second_moment(sites: &[Vec<i64>], re: &[f64], im: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, s) in sites.iter().enumerate() {
        let w = re[i] * re[i] + im[i] * im[i];
        let r2: i64 = s.iter().map(|x| x * x).sum();
        num += r2 as f64 * w;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

struct Recorder<'a> {
    sites: &'a [Vec<i64>],
    boundary: Vec<usize>,
    psi0: Vec<Complex64>,
    norm0_sq: f64,
    traj: Trajectory,
    sup: f64,
}

impl<'a> Recorder<'a> {
    fn new(packet: &'a WavePacket, sites: &'a [Vec<i64>]) -> Self {
        Self {
            sites,
            boundary: packet.boundary(),
            psi0: packet.amplitudes.clone(),
            norm0_sq: packet.amplitudes.iter().map(|z| z.norm_sqr()).sum(),
            traj: Trajectory::default(),
            sup: 0.0,
        }
    }

    fn boundary_weight(&self, re: &[f64], im: &[f64]) -> f64 {
        self.boundary.iter().map(|&i| re[i] * re[i] + im[i] * im[i]).sum()
    }

    fn observe(&mut self, re: &[f64], im: &[f64]) {
        self.sup = self.sup.max(second_moment(self.sites, re, im));
    }

    fn record(&mut self, t: f64, re: &[f64], im: &[f64], drift: f64) {
        let m2 = second_moment(self.sites, re, im);
        self.sup = self.sup.max(m2);
        let (mut a, mut b) = (0.0, 0.0);
        for (i, z) in self.psi0.iter().enumerate() {
            a += z.re * re[i] + z.im * im[i];
            b += z.re * im[i] - z.im * re[i];
        }
        self.traj.times.push(t);
        self.traj.second_moment.push(m2);
        self.traj.running_sup.push(self.sup);
        self.traj.return_prob.push((a * a + b * b) / (self.norm0_sq * self.norm0_sq));
        self.traj.norm_drift.push(drift);
    }
}

fn check_leak(rec: &mut Recorder<'_>, re: &[f64], im: &[f64], t: f64, opts: &EvolveOptions) -> Result<bool> {
    let w = rec.boundary_weight(re, im);
    rec.traj.boundary_weight = rec.traj.boundary_weight.max(w);
    if w > opts.leak_tol {
        if opts.stop_on_leak {
            rec.traj.leak_time = Some(t);
            return Ok(true);
        }
        return Err(Error::BoundaryLeak { time: t, weight: w });
    }
    Ok(false)
}

fn potential_on(sample: &DisorderSample, sites: &[Vec<i64>]) -> Result<Vec<f64>> {
    sites.iter().map(|s| sample.value(s).ok_or(Error::WindowMismatch)).collect()
}

fn validate_run(spec: &OperatorSpec, packet: &WavePacket, omega: &FrequencyVector, theta: &[f64], t_end: f64, dt: f64) -> Result<()> {
    spec.validate()?;
    if packet.d() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: packet.d() });
    }
    if omega.nu() != spec.nu || theta.len() != spec.nu {
        return Err(Error::DimensionMismatch { expected: spec.nu, got: theta.len() });
    }
    if !(t_end >= 0.0) || !(dt > 0.0) {
        return Err(invalid("dt", "needs dt > 0 and T >= 0"));
    }
    Ok(())
}

/// Integrates `i psi' = (eps Delta + V + W(t)) psi` on the packet's window by
/// Strang splitting: kinetic half steps in the sine basis around an exact
/// diagonal phase `V dt + int W`. Consecutive kinetic half steps are merged.
/// Without potential and drive the kinetic flow is exact, and it is applied
/// once per sample interval.
pub fn evolve_schrodinger(
    spec: &OperatorSpec,
    sample: &DisorderSample,
    packet: &WavePacket,
    omega: &FrequencyVector,
    theta: &[f64],
    t_end: f64,
    opts: &EvolveOptions,
) -> Result<(Trajectory, WavePacket)> {
    let dt = opts.dt;
    validate_run(spec, packet, omega, theta, t_end, dt)?;
    let sites = packet.sites();
    let v = potential_on(sample, &sites)?;
    let diag_free = spec.delta == 0.0 && v.iter().all(|&x| x == 0.0);
    let diag_bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + spec.drive_sup();
    let estimate = dt * dt * 2.0 * spec.d as f64 * spec.eps * diag_bound;
    if estimate > opts.step_budget {
        return Err(Error::StepTooLarge { estimate, budget: opts.step_budget });
    }
    let kinetic = Kinetic::new(&packet.sides());
    let mut re: Vec<f64> = packet.amplitudes.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = packet.amplitudes.iter().map(|z| z.im).collect();
    let steps = Float::round(t_end / dt) as usize;
    let marks = sample_steps(steps, dt, opts);
    let t0 = packet.time;
    let mut rec = Recorder::new(packet, &sites);
    let drift = |re: &[f64], im: &[f64]| {
        (Float::sqrt(re.iter().zip(im).map(|(a, b)| a * a + b * b).sum::<f64>()) - packet.norm0).abs()
    };
    rec.record(t0, &re, &im, 0.0);
    let mut step = 0usize;
    let mut stopped = false;
    for &mark in &marks[1..] {
        if diag_free {
            kinetic.apply(&mut re, &mut im, spec.eps * dt * (mark - step) as f64);
            step = mark;
            rec.observe(&re, &im);
            if check_leak(&mut rec, &re, &im, t0 + step as f64 * dt, opts)? {
                stopped = true;
            }
        } else {
            kinetic.apply(&mut re, &mut im, 0.5 * spec.eps * dt);
            while step < mark {
                let (ta, tb) = (t0 + step as f64 * dt, t0 + (step + 1) as f64 * dt);
                for (i, s) in sites.iter().enumerate() {
                    let phase = v[i] * dt + drive_integral(spec, omega, theta, ta, tb, s);
                    let (sn, cs) = Float::sin_cos(phase);
                    let (a, b) = (re[i], im[i]);
                    re[i] = a * cs + b * sn;
                    im[i] = b * cs - a * sn;
                }
                step += 1;
                let c = if step == mark { 0.5 } else { 1.0 };
                kinetic.apply(&mut re, &mut im, c * spec.eps * dt);
                if step < mark {
                    rec.observe(&re, &im);
                    if check_leak(&mut rec, &re, &im, t0 + step as f64 * dt, opts)? {
                        stopped = true;
                        break;
                    }
                }
            }
            if stopped {
                // Finish the pending half step so the state is consistent.
                kinetic.apply(&mut re, &mut im, 0.5 * spec.eps * dt);
            } else if check_leak(&mut rec, &re, &im, t0 + step as f64 * dt, opts)? {
                stopped = true;
            }
        }
        rec.record(t0 + step as f64 * dt, &re, &im, drift(&re, &im));
        if stopped {
            break;
        }
    }
    let mut out = packet.clone();
    out.amplitudes = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
    out.time = t0 + step as f64 * dt;
    Ok((rec.traj, out))
}

/// `(eps Delta + V + W(t)) x` on the window, real and imaginary parts at once.
fn apply_field(
    spec: &OperatorSpec,
    sides: &[usize],
    diag: &[f64],
    x: &[Complex64],
    y: &mut [Complex64],
) {
    for i in 0..x.len() {
        y[i] = x[i] * diag[i];
    }
    if spec.eps == 0.0 {
        return;
    }
    let mut stride = 1usize;
    for axis in (0..sides.len()).rev() {
        let m = sides[axis];
        for i in 0..x.len() {
            if (i / stride) % m + 1 < m {
                let k = i + stride;
                y[i] += x[k] * spec.eps;
                y[k] += x[i] * spec.eps;
            }
        }
        stride *= m;
    }
}

/// Integrates `psi'' = (eps Delta + V + W(t)) psi` as a first-order system by
/// the implicit midpoint rule. Each step solves
/// `(I - dt^2/4 H) psi_1 = psi_0 + dt phi_0 + dt^2/4 H psi_0` by conjugate
/// gradients, which requires `dt^2/4 ||H|| < 1`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_wave(
    spec: &OperatorSpec,
    sample: &DisorderSample,
    packet: &WavePacket,
    velocity: &[Complex64],
    omega: &FrequencyVector,
    theta: &[f64],
    t_end: f64,
    opts: &EvolveOptions,
) -> Result<(Trajectory, WavePacket, Vec<Complex64>)> {
    let dt = opts.dt;
    validate_run(spec, packet, omega, theta, t_end, dt)?;
    if velocity.len() != packet.len() {
        return Err(Error::DimensionMismatch { expected: packet.len(), got: velocity.len() });
    }
    let sites = packet.sites();
    let sides = packet.sides();
    let v = potential_on(sample, &sites)?;
    let h_norm = 2.0 * spec.d as f64 * spec.eps + v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + spec.drive_sup();
    let estimate = 0.25 * dt * dt * h_norm;
    if estimate >= 1.0 {
        return Err(Error::StepTooLarge { estimate, budget: 1.0 });
    }
    let n = packet.len();
    let mut psi = packet.amplitudes.clone();
    let mut phi = velocity.to_vec();
    let steps = Float::round(t_end / dt) as usize;
    let marks = sample_steps(steps, dt, opts);
    let mut rec = Recorder::new(packet, &sites);
    let static_diag = v.clone();
    let invariant = |psi: &[Complex64], phi: &[Complex64]| -> f64 {
        let mut hp = vec![Complex64::new(0.0, 0.0); n];
        apply_field(spec, &sides, &static_diag, psi, &mut hp);
        let kin: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        let pot: f64 = psi.iter().zip(&hp).map(|(a, b)| (a.conj() * b).re).sum();
        kin - pot
    };
    let inv0 = invariant(&psi, &phi);
    let drift = |psi: &[Complex64], phi: &[Complex64]| -> f64 {
        let now = invariant(psi, phi);
        (now - inv0).abs() / inv0.abs().max(1e-300)
    };
    let split = |z: &[Complex64]| -> (Vec<f64>, Vec<f64>) { (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect()) };
    {
        let (r, i) = split(&psi);
        rec.record(0.0, &r, &i, 0.0);
    }
    let mut diag = vec![0.0; n];
    let mut hx = vec![Complex64::new(0.0, 0.0); n];
    let mut step = 0usize;
    let mut stopped = false;
    let c = 0.25 * dt * dt;
    for &mark in &marks[1..] {
        while step < mark {
            let tm = (step as f64 + 0.5) * dt;
            for (i, s) in sites.iter().enumerate() {
                diag[i] = v[i] + drive_value(spec, omega, theta, tm, s);
            }
            apply_field(spec, &sides, &diag, &psi, &mut hx);
            let rhs: Vec<Complex64> = (0..n).map(|i| psi[i] + phi[i] * dt + hx[i] * c).collect();
            let next = conjugate_gradient(
                |x, y| {
                    apply_field(spec, &sides, &diag, x, y);
                    for i in 0..x.len() {
                        y[i] = x[i] - y[i] * c;
                    }
                },
                &rhs,
                &psi,
            )?;
            for i in 0..n {
                let new_phi = phi[i] * -1.0 + (next[i] - psi[i]) * (2.0 / dt);
                phi[i] = new_phi;
            }
            psi = next;
            step += 1;
            let (r, i) = split(&psi);
            rec.observe(&r, &i);
            if check_leak(&mut rec, &r, &i, step as f64 * dt, opts)? {
                stopped = true;
                break;
            }
        }
        let (r, i) = split(&psi);
        rec.record(step as f64 * dt, &r, &i, drift(&psi, &phi));
        if stopped {
            break;
        }
    }
    let mut out = packet.clone();
    out.amplitudes = psi;
    out.time = step as f64 * dt;
    Ok((rec.traj, out, phi))
}

/// Conjugate gradients for a real symmetric positive definite operator on
/// complex vectors.
fn conjugate_gradient(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x0: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = b.len();
    let dot = |a: &[Complex64], c: &[Complex64]| -> Complex64 { a.iter().zip(c).map(|(x, y)| x.conj() * y).sum() };
    let mut x = x0.to_vec();
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    apply(&x, &mut ax);
    let mut r: Vec<Complex64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let target = 1e-28 * dot(b, b).re.max(1e-300);
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..10 * n + 100 {
        if rr <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::NoConvergence);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
    }
    if rr <= 1e-20 * dot(b, b).re.max(1e-300) {
        Ok(x)
    } else {
        Err(Error::NoConvergence)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiEnergyReport {
    pub cutoff: usize,
    /// Largest `||psi_direct(t) - psi_lifted(t)||` over the sample times.
    pub deviation: f64,
    /// Largest weight of the lifted state on the outer `n`-shell.
    pub n_leakage: f64,
    pub times: Vec<f64>,
    pub deviations: Vec<f64>,
}

/// Lifts `psi0` to `Phi_n(0) = delta_{n0} psi0` on the window times
/// `[-M, M]^nu` and evolves it under the autonomous operator
/// `eps Delta + V + 2 pi n.omega + sum_k (W_k / 2)(shift_{+e_k} + shift_{-e_k})`,
/// then maps back by `psi(t) = sum_n e^{2 pi i n.(omega t + theta)} Phi_n(t)`
/// and compares with the direct integration at the sample times.
#[allow(clippy::too_many_arguments)]
pub fn quasienergy_consistency(
    spec: &OperatorSpec,
    sample: &DisorderSample,
    packet: &WavePacket,
    omega: &FrequencyVector,
    theta: &[f64],
    t_end: f64,
    cutoff: usize,
    opts: &EvolveOptions,
) -> Result<QuasiEnergyReport> {
    let (traj, _) = evolve_schrodinger(spec, sample, packet, omega, theta, t_end, opts)?;
    let quiet = EvolveOptions { samples: 0, checkpoints: Vec::new(), ..opts.clone() };
    let sites = packet.sites();
    let v = potential_on(sample, &sites)?;
    let w = packet.len();
    let side = 2 * cutoff + 1;
    let modes = side.pow(spec.nu as u32);
    let size = w * modes;
    linalg::check_cap(size)?;
    let mode_coords: Vec<Vec<i64>> = (0..modes)
        .map(|mut i| {
            let mut c = vec![0i64; spec.nu];
            for k in (0..spec.nu).rev() {
                c[k] = (i % side) as i64 - cutoff as i64;
                i /= side;
            }
            c
        })
        .collect();
    let wsides = packet.sides();
    // Index: site-major, mode-minor.
    let mut k = Mat::<f64>::zeros(size, size);
    for (s, js) in sites.iter().enumerate() {
        for (m, nm) in mode_coords.iter().enumerate() {
            let i = s * modes + m;
            k[(i, i)] = v[s] + 2.0 * PI * omega.dot(nm);
            for axis in 0..spec.nu {
                let mut up = nm.clone();
                up[axis] += 1;
                if up[axis] <= cutoff as i64 {
                    let mu = m + side.pow((spec.nu - 1 - axis) as u32);
                    let c = 0.5 * spec.drive_coupling(axis, js);
                    k[(i, s * modes + mu)] = c;
                    k[(s * modes + mu, i)] = c;
                }
            }
        }
    }
    let mut stride = 1usize;
    for axis in (0..spec.d).rev() {
        let m = wsides[axis];
        for s in 0..w {
            if (s / stride) % m + 1 < m {
                for mm in 0..modes {
                    let (a, b) = (s * modes + mm, (s + stride) * modes + mm);
                    k[(a, b)] = spec.eps;
                    k[(b, a)] = spec.eps;
                }
            }
        }
        stride *= m;
    }
    let (vals, vecs) = linalg::sym_eigen(k.as_ref())?;
    let zero = mode_coords.iter().position(|c| c.iter().all(|&x| x == 0)).expect("zero mode");
    // Coefficients of Phi(0) in the eigenbasis.
    let coeff: Vec<Complex64> = (0..size)
        .map(|e| {
            (0..w).map(|s| packet.amplitudes[s] * vecs[(s * modes + zero, e)]).sum::<Complex64>()
        })
        .collect();
    let outer: Vec<usize> = (0..modes).filter(|&m| mode_coords[m].iter().any(|&x| x.unsigned_abs() as usize == cutoff)).collect();
    let mut deviations = Vec::new();
    let mut leak = 0.0f64;
    let mut direct = packet.clone();
    let t_start = packet.time;
    for &t in &traj.times {
        if t > direct.time {
            direct = evolve_schrodinger(spec, sample, &direct, omega, theta, t - direct.time, &quiet)?.1;
        }
        let t = t - t_start;
        let phases: Vec<Complex64> = vals.iter().zip(&coeff).map(|(&l, &c)| c * Complex64::from_polar(1.0, -l * t)).collect();
        let mut dev = 0.0f64;
        let mut lw = 0.0f64;
        for s in 0..w {
            let mut psi = Complex64::new(0.0, 0.0);
            for (m, nm) in mode_coords.iter().enumerate() {
                let row = s * modes + m;
                let mut phi = Complex64::new(0.0, 0.0);
                for e in 0..size {
                    phi += phases[e] * vecs[(row, e)];
                }
                let arg = 2.0 * PI * nm.iter().enumerate().map(|(k, &x)| x as f64 * (omega.as_slice()[k] * t + theta[k])).sum::<f64>();
                psi += phi * Complex64::from_polar(1.0, arg);
                if outer.contains(&m) {
                    lw += phi.norm_sqr();
                }
            }
            dev += (psi - direct.amplitudes[s]).norm_sqr();
        }
        leak = leak.max(lw);
        deviations.push(Float::sqrt(dev));
    }
    Ok(QuasiEnergyReport {
        cutoff,
        deviation: deviations.iter().fold(0.0, |m: f64, &x| m.max(x)),
        n_leakage: leak,
        times: traj.times,
        deviations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub t_short: f64,
    pub t_long: f64,
    /// Per disorder seed: sup of the second moment up to `t_short`.
    pub sup_short: Vec<f64>,
    /// Per disorder seed: sup up to `t_long`.
    pub sup_long: Vec<f64>,
    /// `sup_long / sup_short` per seed.
    pub ratios: Vec<f64>,
    pub free_sup_short: f64,
    pub free_sup_long: f64,
    /// `free_sup_long / free_sup_short`.
    pub free_growth: f64,
}

/// Runs driven disordered evolutions from a single site for each seed and
/// a free run (`V = 0`, no drive) at the same `eps`, and reports the time
/// suprema of the second moment at `t_short` and `t_long`.
#[allow(clippy::too_many_arguments)]
pub fn localization_contrast(
    spec: &OperatorSpec,
    omega: &FrequencyVector,
    theta: &[f64],
    t_short: f64,
    t_long: f64,
    seeds: &[u64],
    window: i64,
    opts: &EvolveOptions,
) -> Result<ContrastReport> {
    let mut o = opts.clone();
    o.checkpoints.push(t_short);
    let packet = WavePacket::site(spec.d, window, &vec![0; spec.d])?;
    let runs = crate::par::map_indexed(seeds.len(), |i| -> Result<(f64, f64)> {
        let sample = DisorderSample::cube(spec.disorder, spec.d, window, seeds[i])?;
        let (tr, _) = evolve_schrodinger(spec, &sample, &packet, omega, theta, t_long, &o)?;
        Ok((tr.sup_until(t_short), tr.sup_until(t_long)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let free_spec = OperatorSpec { delta: 0.0, ..spec.clone() };
    let free_r = Float::ceil(4.0 * spec.eps * t_long + 20.0) as i64;
    let free_sample = DisorderSample::from_values(
        spec.disorder,
        vec![-free_r; spec.d],
        vec![free_r; spec.d],
        vec![0.0; (2 * free_r as usize + 1).pow(spec.d as u32)],
    )?;
    let free_packet = WavePacket::site(spec.d, free_r, &vec![0; spec.d])?;
    let (free, _) = evolve_schrodinger(&free_spec, &free_sample, &free_packet, omega, theta, t_long, &o)?;
    let (free_short, free_long) = (free.sup_until(t_short), free.sup_until(t_long));
    let sup_short: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let sup_long: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(ContrastReport {
        t_short,
        t_long,
        ratios: sup_short.iter().zip(&sup_long).map(|(a, b)| if *a > 0.0 { b / a } else { 1.0 }).collect(),
        sup_short,
        sup_long,
        free_sup_short: free_short,
        free_sup_long: free_long,
        free_growth: if free_short > 0.0 { free_long / free_short } else { 1.0 },
    })
}
