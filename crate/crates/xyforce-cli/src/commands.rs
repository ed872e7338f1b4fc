//! One function per subcommand. Each writes its files into `dir` and returns
//! whether the run succeeded.

use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use xyforce::grid::{midpoint_q, relaxation_grid, xi_grid};
use xyforce::lattice::{l2_tail, to_lattice_harmonics};
use xyforce::params::{forcing_case, forcing_extremes, gamma_threshold, static_eigenvalue};
use xyforce::propagators::{j_at, PropagatorClass, XiPoint};
use xyforce::reed_series::{assemble_solution, residual, PeriodicSolution, SeriesContext};
use xyforce::volterra::{drive_samples, max_step, relaxation_fit, RelaxationConfig, VolterraKernel};
use xyforce::ModelParams;

use crate::checks::{run_all, Inputs, Status};
use crate::config::RunConfig;
use crate::output::{num, write_json, Csv};

pub fn params(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let f = cfg.forcing()?;
    let (g1, g0) = gamma_threshold(&p, &f, cfg.constants.c1)?;
    let e = forcing_extremes(&f, p.alpha);
    let eig = static_eigenvalue(p.g, p.h).ok();
    let report = json!({
        "config_hash": cfg.hash(),
        "alpha": p.alpha,
        "gamma": p.gamma,
        "eps_bar": p.eps_bar,
        "eps": p.eps,
        "r": p.r,
        "k_singular": p.k_singular(),
        "gamma_1": g1,
        "gamma_0": g0,
        "static_eigenvalue": eig,
        "forcing_case": forcing_case(&f, p.alpha)?,
        "forcing_extremes": e,
    });
    let rows: [(&str, String); 10] = [
        ("alpha", num(p.alpha)),
        ("gamma", num(p.gamma)),
        ("eps_bar", num(p.eps_bar)),
        ("eps", num(p.eps)),
        ("r", num(p.r)),
        ("gamma_1", num(g1)),
        ("gamma_0", num(g0)),
        ("static_eigenvalue", eig.map_or("none".into(), num)),
        ("v_bar", num(e.v_bar)),
        ("v_low_inband", num(e.v_low_inband)),
    ];
    for (k, v) in rows {
        println!("{k:<18} {v}");
    }
    println!("{:<18} {}", "v_bar_outband", num(e.v_bar_outband));
    write_json(dir, "params.json", &report)?;
    Ok(true)
}

pub fn verify(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let f = cfg.forcing()?;
    let checks = run_all(&Inputs {
        params: p,
        forcing: &f,
        constants: cfg.constants,
        n_q: cfg.grid.n_q,
        window_refine: cfg.grid.window_refine,
        n_max: cfg.series.n_max,
    })?;
    let hash = cfg.hash();
    let mut csv = Csv::create(dir, "verify.csv", &hash, "dimensionless", &["check_id", "margin", "bound", "pass"])?;
    for c in &checks {
        csv.row(&[c.id.clone(), num(c.margin), num(c.bound), c.status.as_str().into()])?;
    }
    csv.finish()?;
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.id.as_str()).collect();
    for c in &checks {
        println!("{:<36} {:<14} margin={} bound={}", c.id, c.status.as_str(), num(c.margin), num(c.bound));
    }
    write_json(dir, "verify.json", &json!({ "config_hash": hash, "checks": checks, "failed": failed }))?;
    if !failed.is_empty() {
        eprintln!("{} check(s) failed: {}", failed.len(), failed.join(", "));
    }
    Ok(failed.is_empty())
}

/// Series solution for the time-domain problem: the forcing is reflected so
/// that harmonic `k` of `e^{i k omega t}` is the series coefficient `-k`.
fn time_domain_solution(cfg: &RunConfig, p: &ModelParams, pts: &[XiPoint]) -> Result<(PeriodicSolution, f64)> {
    let f = cfg.forcing()?.reflected();
    let ctx = SeriesContext::new(*p, f, p.gamma, cfg.constants.margin_floor);
    let sol = assemble_solution(pts, &ctx, cfg.series.n_max, cfg.series.mu_cap)?;
    let res = residual(&sol, &ctx)?;
    Ok((sol, res))
}

fn class_of(k: i64, pt: &XiPoint, p: &ModelParams) -> PropagatorClass {
    if !p.is_singular_momentum(k) {
        PropagatorClass::Regular
    } else if pt.window_mu() == Some(k) {
        PropagatorClass::LocalizedWindow
    } else {
        PropagatorClass::SingularPoint
    }
}

pub fn periodic(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let pts = xi_grid(&p, cfg.grid.n_q, cfg.grid.window_refine);
    let (sol, res) = time_domain_solution(cfg, &p, &pts)?;
    let hash = cfg.hash();

    let mut csv = Csv::create(
        dir,
        "solution.csv",
        &hash,
        "mu: harmonic of exp(i mu omega t); xi = energy/g; psi dimensionless",
        &["mu", "xi", "re", "im"],
    )?;
    for mu in -sol.mu_cap..=sol.mu_cap {
        for (i, pt) in pts.iter().enumerate() {
            let c = sol.coefficient(i, -mu);
            csv.row(&[mu.to_string(), num(pt.xi), num(c.re), num(c.im)])?;
        }
    }
    csv.finish()?;

    let kmax = p.k_singular() + 2;
    let mut csv = Csv::create(dir, "propagators.csv", &hash, "xi = energy/g; j in units of 1/omega", &["k", "xi", "re", "im", "class"])?;
    for k in -kmax..=kmax {
        for pt in &pts {
            let v = j_at(k, pt, &p)?;
            csv.row(&[k.to_string(), num(pt.xi), num(v.re), num(v.im), class_of(k, pt, &p).as_str().into()])?;
        }
    }
    csv.finish()?;

    write_json(
        dir,
        "periodic.json",
        &json!({
            "config_hash": hash,
            "points": pts.len(),
            "mu_cap": sol.mu_cap,
            "n_max": sol.n_max,
            "gamma": p.gamma,
            "residual": res,
            "order_sup": sol.order_sup,
        }),
    )?;
    println!("{} points, mu_cap {}, residual {}", pts.len(), sol.mu_cap, num(res));
    Ok(true)
}

pub fn volterra(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let f = cfg.forcing()?;
    let v = &cfg.volterra;
    let pts = relaxation_grid(&p, v.n_xi, v.exclude_windows);
    let hash = cfg.hash();
    let limit = max_step(&p);
    if v.dt > limit * (1.0 + 1e-12) {
        bail!(xyforce::Error::StepTooLarge { dt: v.dt, limit });
    }
    let mut csv = Csv::create(dir, "volterra.csv", &hash, "t in units of 1/energy; xi = energy/g", &["t0", "xi", "t", "re", "im"])?;
    for &t0 in &v.t0_list {
        let steps = ((v.t1 - t0) / v.dt - 1e-9).ceil() as usize;
        let dt = (v.t1 - t0) / steps as f64;
        let kernel = VolterraKernel::new(p.g, dt, steps);
        let drive = drive_samples(&f, p.omega, t0, dt, steps);
        let stride = (steps / v.samples).max(1);
        let sols: Vec<Vec<Complex64>> =
            pts.par_iter().map(|pt| kernel.solve(pt.xi, p.g, p.h, &drive)).collect::<xyforce::Result<_>>()?;
        for (pt, psi) in pts.iter().zip(&sols) {
            for n in (0..=steps).step_by(stride) {
                let t = t0 + n as f64 * dt;
                csv.row(&[num(t0), num(pt.xi), num(t), num(psi[n].re), num(psi[n].im)])?;
            }
        }
    }
    csv.finish()?;
    println!("{} points, {} start time(s)", pts.len(), v.t0_list.len());
    Ok(true)
}

pub fn compare(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let f = cfg.forcing()?;
    let v = &cfg.volterra;
    let pts = relaxation_grid(&p, v.n_xi, v.exclude_windows);
    let horizon = v.t0_list.iter().map(|t0| v.t1 - t0).fold(f64::INFINITY, f64::min);
    let rc = RelaxationConfig {
        t0_list: v.t0_list.clone(),
        horizon,
        dt: v.dt,
        window: cfg.relaxation_window(),
        n_max: cfg.series.n_max,
        margin_floor: cfg.constants.margin_floor,
    };
    let fit = relaxation_fit(&pts, &rc, &p, &f)?;
    let hash = cfg.hash();
    let mut csv = Csv::create(
        dir,
        "relaxation.csv",
        &hash,
        "t_minus_t0 in units of 1/energy; sup_diff dimensionless; envelope_flag marks points inside the fit window",
        &["t_minus_t0", "sup_diff", "envelope_flag"],
    )?;
    let (a, b) = fit.window;
    for &(t, d) in &fit.envelope {
        csv.row(&[num(t), num(d), (t >= a && t <= b).to_string()])?;
    }
    csv.finish()?;
    let skipped = fit.max_difference == 0.0;
    write_json(
        dir,
        "compare.json",
        &json!({
            "config_hash": hash,
            "points": pts.len(),
            "fit_skipped": skipped,
            "exponent": fit.exponent,
            "exponent_stderr": fit.exponent_stderr,
            "amplitude": fit.amplitude,
            "log_rms": fit.residual,
            "window": [a, b],
            "monotone": fit.monotone,
            "max_difference": fit.max_difference,
        }),
    )?;
    if skipped {
        println!("difference vanishes identically; fit skipped");
    } else {
        println!("exponent {} +- {} over [{}, {}]", num(fit.exponent), num(fit.exponent_stderr), a, b);
    }
    Ok(true)
}

pub fn lattice(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let n = cfg.lattice.n_q;
    let pts: Vec<XiPoint> = midpoint_q(n).iter().map(|q| XiPoint::new(q.cos(), &p)).collect();
    let (sol, _) = time_domain_solution(cfg, &p, &pts)?;
    let hash = cfg.hash();
    let mut csv = Csv::create(dir, "lattice.csv", &hash, "mu: harmonic of exp(i mu omega t); x: lattice site", &["mu", "x", "re", "im"])?;
    let harmonics: Vec<Vec<Complex64>> =
        (-sol.mu_cap..=sol.mu_cap).map(|mu| (0..n).map(|i| sol.coefficient(i, -mu)).collect()).collect();
    let profiles = to_lattice_harmonics(&harmonics, cfg.lattice.x_max)?;
    let mut summary = Vec::new();
    for (mu, prof) in (-sol.mu_cap..=sol.mu_cap).zip(&profiles) {
        let xm = prof.x_max as i64;
        for x in -xm..=xm {
            let v = prof.at(x);
            csv.row(&[mu.to_string(), x.to_string(), num(v.re), num(v.im)])?;
        }
        summary.push(json!({
            "mu": mu,
            "norm_l2": prof.norm_l2,
            "tail_mass": prof.tail_mass,
            "tail_beyond_64": l2_tail(prof, 64),
        }));
    }
    csv.finish()?;
    let total: f64 = profiles.iter().map(|q| q.norm_l2 * q.norm_l2).sum();
    let beyond: f64 = profiles.iter().map(|q| l2_tail(q, 64) * q.norm_l2 * q.norm_l2).sum();
    write_json(
        dir,
        "lattice.json",
        &json!({
            "config_hash": hash,
            "norm_l2": total.sqrt(),
            "tail_beyond_64": if total > 0.0 { beyond / total } else { 0.0 },
            "harmonics": summary,
        }),
    )?;
    println!("{} harmonics on |x| <= {}", summary.len(), cfg.lattice.x_max);
    Ok(true)
}
