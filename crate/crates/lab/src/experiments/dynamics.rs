use std::f64::consts::PI;

use num_complex::Complex64;
use qelab_core::dynamics::{evolve_schrodinger, localization_contrast, EvolveOptions, WavePacket};
use qelab_core::rng::{substream, trial_rng};
use qelab_core::{DisorderSample, OperatorSpec};
use rand::Rng;

use super::at_most;
use crate::artifact::{Assertion, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::error::Result;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let omega = cfg.omega()?;
    let b = &cfg.dynamics;
    let mut out = Outcome::default();
    let theta0 = vec![0.0; spec.nu];

    // Free spreading: V = 0, no drive. On Z^d the second moment is 2 d eps^2 t^2.
    let free_spec = OperatorSpec { delta: 0.0, ..spec.clone() };
    let r = b.free_window;
    let sites = (2 * r as usize + 1).pow(spec.d as u32);
    let zero = DisorderSample::from_values(spec.disorder, vec![-r; spec.d], vec![r; spec.d], vec![0.0; sites])?;
    let packet = WavePacket::site(spec.d, r, &vec![0; spec.d])?;
    let opts = EvolveOptions { dt: b.dt, samples: b.samples, leak_tol: 1e-12, stop_on_leak: true, ..Default::default() };
    let (traj, _) = evolve_schrodinger(&free_spec, &zero, &packet, &omega, &theta0, b.free_time, &opts)?;
    let mut free = Table::new(
        "dynamics_free",
        &["time", "second_moment", "oracle", "relative_error", "return_prob", "norm_drift"],
    );
    let mut errs = Vec::new();
    for (k, (&t, &m)) in traj.times.iter().zip(&traj.second_moment).enumerate() {
        if t <= 0.0 || traj.leak_time.is_some_and(|lt| t >= lt) {
            continue;
        }
        let exact = 2.0 * spec.d as f64 * spec.eps * spec.eps * t * t;
        let rel = (m - exact).abs() / exact;
        errs.push(rel);
        free.push(vec![
            t.into(),
            m.into(),
            exact.into(),
            rel.into(),
            traj.return_prob[k].into(),
            traj.norm_drift[k].into(),
        ]);
    }
    let mut a = at_most("free_second_moment", &errs, b.free_tolerance);
    a.detail = format!(
        "{} before leak onset at t = {}",
        a.detail,
        traj.leak_time.map_or("none".to_string(), |t| format!("{t}"))
    );
    out.assertions.push(a);
    out.tables.push(free);

    // Single driven site: psi(t) = exp(-i (v t + int_0^t W(s) ds)).
    let mut single = Table::new("dynamics_single_site", &["seed", "v", "theta", "time", "re", "im", "exact_re", "exact_im", "error"]);
    let mut single_err = Vec::new();
    let one = OperatorSpec { eps: 0.0, ..spec.clone() };
    let origin = vec![0i64; spec.d];
    for &seed in &cfg.seeds {
        let sample = DisorderSample::cube(spec.disorder, spec.d, 0, substream(seed, &[1]))?;
        let v = sample.value(&origin).expect("origin in window");
        let mut rng = trial_rng(seed, &[2]);
        let theta: Vec<f64> = (0..spec.nu).map(|_| rng.random()).collect();
        let packet = WavePacket::site(spec.d, 0, &origin)?;
        let o = EvolveOptions { dt: b.dt, samples: 0, leak_tol: 2.0, ..Default::default() };
        let (_, end) = evolve_schrodinger(&one, &sample, &packet, &omega, &theta, b.single_site_time, &o)?;
        let t = end.time;
        let drive: f64 = (0..spec.nu)
            .map(|k| {
                let w = omega.as_slice()[k];
                let amp = spec.drive_coupling(k, &origin);
                amp / (2.0 * PI * w) * ((2.0 * PI * (w * t + theta[k])).sin() - (2.0 * PI * theta[k]).sin())
            })
            .sum();
        let exact = Complex64::from_polar(1.0, -(v * t + drive));
        let z = end.amplitudes[0];
        let err = (z - exact).norm();
        single_err.push(err);
        single.push(vec![
            seed.into(),
            v.into(),
            theta[0].into(),
            t.into(),
            z.re.into(),
            z.im.into(),
            exact.re.into(),
            exact.im.into(),
            err.into(),
        ]);
    }
    out.assertions.push(at_most("single_site_closed_form", &single_err, b.single_site_tolerance));
    out.tables.push(single);

    if let Some(c) = &b.contrast {
        let mut table = Table::new("dynamics_contrast", &["seed", "run", "disorder_seed", "sup_short", "sup_long", "ratio"]);
        let mut growth = Table::new("dynamics_free_growth", &["seed", "free_sup_short", "free_sup_long", "growth"]);
        let mut ratios = Vec::new();
        let mut growths = Vec::new();
        for &seed in &cfg.seeds {
            let seeds: Vec<u64> = (0..c.runs).map(|i| substream(seed, &[i as u64, 3])).collect();
            let o = EvolveOptions { dt: b.dt, samples: b.samples, leak_tol: 1e-10, ..Default::default() };
            let rep = localization_contrast(&spec, &omega, &theta0, c.t_short, c.t_long, &seeds, c.window, &o)?;
            for (i, &s) in seeds.iter().enumerate() {
                table.push(vec![
                    seed.into(),
                    i.into(),
                    s.into(),
                    rep.sup_short[i].into(),
                    rep.sup_long[i].into(),
                    rep.ratios[i].into(),
                ]);
            }
            growth.push(vec![seed.into(), rep.free_sup_short.into(), rep.free_sup_long.into(), rep.free_growth.into()]);
            ratios.extend(rep.ratios);
            growths.push(rep.free_growth);
        }
        out.assertions.push(at_most("disordered_sup_ratio", &ratios, c.max_ratio));
        let low = growths.iter().copied().fold(f64::INFINITY, f64::min);
        out.assertions.push(Assertion::hard(
            "free_growth",
            low >= c.min_free_growth,
            format!("smallest free growth {low:.2}, required {}", c.min_free_growth),
        ));
        out.tables.push(table);
        out.tables.push(growth);
    }
    Ok(out)
}
