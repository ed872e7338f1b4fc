//! The numerical checks run by `verify`.

use anyhow::Result;
use serde::Serialize;
use xyforce::grid::{window_points, xi_grid};
use xyforce::oscillatory::BesselExp;
use xyforce::params::{gamma_threshold, Constants};
use xyforce::propagators::{j_closed, lj_at, xi_order, WindowGeometry, XiPoint};
use xyforce::reed_series::{assemble_solution, max_order_ratio, residual, SeriesContext};
use xyforce::resummation::{g_case_table, g_direct, stability_margin, sup_resummed, t_bound};
use xyforce::{ForcingSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    OutOfRegime,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "true",
            Self::Fail => "false",
            Self::OutOfRegime => "out_of_regime",
        }
    }

    fn from(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub margin: f64,
    pub bound: f64,
    pub status: Status,
}

fn at_most(id: impl Into<String>, margin: f64, bound: f64) -> Check {
    Check { id: id.into(), margin, bound, status: Status::from(margin <= bound) }
}

fn at_least(id: impl Into<String>, margin: f64, bound: f64) -> Check {
    Check { id: id.into(), margin, bound, status: Status::from(margin >= bound) }
}

pub struct Inputs<'a> {
    pub params: ModelParams,
    pub forcing: &'a ForcingSpec,
    pub constants: Constants,
    pub n_q: usize,
    pub window_refine: usize,
    pub n_max: usize,
}

pub fn run_all(inp: &Inputs) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.extend(closed_form());
    out.extend(geometry(&inp.params, inp.n_q, inp.window_refine)?);
    out.extend(case_table(&inp.params)?);
    out.extend(stability(inp)?);
    out.extend(series(inp)?);
    Ok(out)
}

fn closed_form() -> Vec<Check> {
    let taus = [-3.0, -1.5, -1.1, -0.9, -0.3, 0.0, 0.4, 0.8, 1.2, 2.5];
    let worst = taus
        .iter()
        .map(|&tau| {
            let quad = BesselExp::new(1.0, tau).tail(0.0);
            (quad - j_closed(tau).expect("off the singular points")).norm()
        })
        .fold(0.0, f64::max);
    vec![at_most("propagator.closed_form", worst, 1e-6)]
}

fn geometry(p: &ModelParams, n_q: usize, refine: usize) -> Result<Vec<Check>> {
    let g = WindowGeometry::new(p);
    let ks = p.k_singular();
    let mut out = Vec::new();
    if ks >= 1 {
        let spacing = g.min_spacing();
        out.push(at_most("geometry.min_spacing", (spacing - p.eps_bar / p.alpha).abs(), 1e-12));
        out.push(at_least("geometry.windows_disjoint", spacing - 2.0 * p.r, f64::MIN_POSITIVE));
    }
    let outside = (ks + 1..=50).flat_map(|k| [k, -k]).map(|k| g.xi(k).abs() - 1.0).fold(f64::INFINITY, f64::min);
    out.push(at_least("geometry.regular_outside_band", outside, f64::MIN_POSITIVE));

    let nonzero: Vec<i64> = (-ks..=ks).filter(|&k| k != 0).collect();
    let mut mismatches = 0usize;
    for &k in &nonzero {
        for &kp in &nonzero {
            if k != kp && xi_order(k, kp, p.alpha) != (g.xi(k) > g.xi(kp)) {
                mismatches += 1;
            }
        }
    }
    out.push(at_most("geometry.ordering_predicate", mismatches as f64, 0.0));

    let mut overlap = 0.0f64;
    for pt in xi_grid(p, n_q, refine) {
        for k in -ks..=ks {
            for kp in -ks..=ks {
                if k != kp {
                    overlap = overlap.max((lj_at(k, &pt, p)? * lj_at(kp, &pt, p)?).norm());
                }
            }
        }
    }
    out.push(at_most("geometry.orthogonality", overlap, 0.0));
    Ok(out)
}

fn case_table(p: &ModelParams) -> Result<Vec<Check>> {
    let ks = p.k_singular();
    let mut out = Vec::new();
    for mu in 1..=ks {
        let mut worst = 0.0f64;
        for pt in window_points(mu, p, 200, 2) {
            for k in 1..=ks + 2 {
                let d = g_direct(mu, k, &pt, p)?;
                let t = g_case_table(mu, k, &pt, p)?;
                worst = worst.max((d - t).norm() / d.norm().max(f64::MIN_POSITIVE));
            }
        }
        out.push(at_most(format!("window.g_table.mu={mu}"), worst, 1e-10));
    }
    Ok(out)
}

fn stability(inp: &Inputs) -> Result<Vec<Check>> {
    let (p, f, c) = (&inp.params, inp.forcing, &inp.constants);
    let (_, g0) = gamma_threshold(p, f, c.c1)?;
    let ks = p.k_singular();
    let grids: Vec<(i64, Vec<XiPoint>)> = (-ks..=ks).map(|mu| (mu, window_points(mu, p, 2000, 4))).collect();
    let mut out = Vec::new();
    for div in [8u32, 4, 2] {
        let gamma = g0 / div as f64;
        let mut sup = 0.0f64;
        for (mu, pts) in &grids {
            let m = stability_margin(*mu, gamma, p, f, pts)?;
            out.push(at_least(format!("stability.mu={mu}.gamma=g0/{div}"), m, c.margin_floor));
            sup = sup.max(sup_resummed(*mu, gamma, p, f, pts)?);
        }
        let t = t_bound(gamma, p, f, 1.0)?;
        out.push(at_most(format!("resummed_bound.gamma=g0/{div}"), sup / t, c.c));
    }
    Ok(out)
}

fn series(inp: &Inputs) -> Result<Vec<Check>> {
    let (p, f, c) = (&inp.params, inp.forcing, &inp.constants);
    let (_, g0) = gamma_threshold(p, f, c.c1)?;
    if p.gamma > g0 {
        let skip = |id: &str| Check { id: id.into(), margin: p.gamma, bound: g0, status: Status::OutOfRegime };
        return Ok(vec![skip("series.order_ratio"), skip("series.residual")]);
    }
    let pts = xi_grid(p, inp.n_q, inp.window_refine);
    let ctx = SeriesContext::new(*p, f.clone(), p.gamma, c.margin_floor);
    let sol = assemble_solution(&pts, &ctx, inp.n_max, None)?;
    let ratio = max_order_ratio(&sol);
    let res = residual(&sol, &ctx)?;
    Ok(vec![at_most("series.order_ratio", ratio, 1.0), at_most("series.residual", res, 1e-10)])
}
