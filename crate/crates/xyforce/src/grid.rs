//! Evaluation grids in the band variable `xi = cos q`.

use std::f64::consts::PI;

use crate::params::ModelParams;
use crate::propagators::{WindowGeometry, XiPoint};

/// Smallest allowed distance from singular points and window boundaries.
pub const NUDGE: f64 = 1e-6;

/// Midpoint nodes `q_j = (j + 1/2) pi / n` of `(0, pi)`.
pub fn midpoint_q(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j as f64 + 0.5) * PI / n as f64).collect()
}

/// Abscissae that must be avoided: singular points and window boundaries.
pub fn critical_points(p: &ModelParams) -> Vec<f64> {
    let g = WindowGeometry::new(p);
    let mut c = vec![-1.0, 1.0, -1.0 + p.r, 1.0 - p.r];
    for (k, x) in g.singular_points() {
        if k != 0 {
            c.extend([x, x - p.r, x + p.r]);
        }
    }
    c
}

fn nudge(xi: f64, critical: &[f64]) -> f64 {
    let mut x = xi;
    for &c in critical {
        if (x - c).abs() < NUDGE {
            let dir = if x >= c { 1.0 } else { -1.0 };
            x = c + dir * NUDGE;
        }
    }
    x.clamp(-1.0 + NUDGE * 0.5, 1.0 - NUDGE * 0.5)
}

/// Sorted evaluation points: `cos` of `n` midpoint nodes, each window resampled
/// `refine` times more densely than the base grid there, all points kept
/// `NUDGE` away from singular points and window boundaries.
pub fn xi_grid(p: &ModelParams, n: usize, refine: usize) -> Vec<XiPoint> {
    let critical = critical_points(p);
    let mut xs: Vec<f64> = midpoint_q(n).iter().map(|q| q.cos()).collect();
    if refine > 1 {
        let g = WindowGeometry::new(p);
        let mut extra = Vec::new();
        let mut strip = |lo: f64, hi: f64| {
            let mid = 0.5 * (lo + hi);
            // local spacing of the base grid: d(cos q) = sin q dq
            let base = (1.0 - mid * mid).max(0.0).sqrt() * PI / n as f64;
            let h = (base / refine as f64).max(1e-12);
            let m = (((hi - lo) / h).ceil() as usize).clamp(2, 100_000);
            extra.extend((0..m).map(|i| lo + (i as f64 + 0.5) * (hi - lo) / m as f64));
        };
        strip(1.0 - p.r, 1.0);
        strip(-1.0, -1.0 + p.r);
        for (k, x) in g.singular_points() {
            if k != 0 {
                strip(x - p.r, x + p.r);
            }
        }
        xs.extend(extra);
    }
    let mut xs: Vec<f64> = xs.into_iter().map(|x| nudge(x, &critical)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter().map(|x| XiPoint::new(x, p)).collect()
}

/// Points of the window of `mu` parametrised by their offset from the singular
/// point: `n_uniform` evenly spread offsets plus `per_decade` logarithmically
/// spaced ones on each side, reaching down to `r * 1e-40` and up to the
/// window boundary.
pub fn window_points(mu: i64, p: &ModelParams, n_uniform: usize, per_decade: usize) -> Vec<XiPoint> {
    let r = p.r;
    let mut offs: Vec<f64> = Vec::new();
    for i in 0..n_uniform {
        offs.push(-r + (i as f64 + 0.5) * 2.0 * r / n_uniform as f64);
    }
    let decades = 40;
    for d in 0..decades * per_decade {
        let e = -(d as f64) / per_decade as f64;
        let s = r * 10f64.powf(e) * (1.0 - 1e-9);
        offs.extend([s, -s]);
        // approach to the boundary from inside
        if d > 0 && d <= 12 * per_decade {
            let b = r * (1.0 - 10f64.powf(e));
            offs.extend([b, -b]);
        }
    }
    offs.retain(|s| s.abs() < r && *s != 0.0);
    offs.sort_by(f64::total_cmp);
    offs.dedup();
    let mut pts = Vec::new();
    for s in offs {
        if mu == 0 {
            // right edge: xi = 1 + s with s < 0; left edge: xi = -1 + s with s > 0
            if s < 0.0 {
                pts.push(XiPoint::at_offset(0, 1.0, s, p));
            } else {
                pts.push(XiPoint::at_offset(0, -1.0, s, p));
            }
        } else {
            pts.push(XiPoint::at_offset(mu, 0.0, s, p));
        }
    }
    pts
}

/// At least `n` points of the `cos` midpoint grid, optionally leaving out every
/// point that lies in a window; the base grid is enlarged until enough remain.
pub fn relaxation_grid(p: &ModelParams, n: usize, exclude_windows: bool) -> Vec<XiPoint> {
    let mut m = n.max(1);
    loop {
        let pts: Vec<XiPoint> =
            xi_grid(p, m, 1).into_iter().filter(|pt| !exclude_windows || pt.window.is_none()).collect();
        if pts.len() >= n || m > 64 * n.max(16) {
            return pts;
        }
        m += (n - pts.len()).max(1);
    }
}
