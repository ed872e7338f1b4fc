//! The counterterm collecting resonances of degree one and two, the resummed
//! localised propagator, and the numerical margins that control it.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::forcing::ForcingSpec;
use crate::params::{forcing_case, forcing_extremes, ForcingCase, ModelParams};
use crate::propagators::{d_at, inv_j_window, k_sums, lj_at, rj_at, XiPoint};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `M_mu` sampled on points of the window of `mu`.
#[derive(Debug, Clone)]
pub struct Counterterm {
    pub mu: i64,
    pub gamma: f64,
    pub points: Vec<XiPoint>,
    pub values: Vec<Complex64>,
}

/// `M_mu(xi) = -i gamma V_0 - gamma^2 sum_k V_k V_{-k} Rj_{k+mu}(xi)`.
pub fn counterterm_at(mu: i64, pt: &XiPoint, gamma: f64, p: &ModelParams, f: &ForcingSpec) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, v) in f.modes() {
        sum += v * f.coefficient(-k) * rj_at(k + mu, pt, p)?;
    }
    Ok(-I * gamma * f.v0() - gamma * gamma * sum)
}

pub fn counterterm(
    mu: i64,
    points: &[XiPoint],
    gamma: f64,
    f: &ForcingSpec,
    p: &ModelParams,
) -> Result<Counterterm> {
    if !p.is_singular_momentum(mu) {
        return Err(invalid("mu", format!("|mu| must be <= {}, got {mu}", p.k_singular())));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", format!("must be finite and >= 0, got {gamma}")));
    }
    let points: Vec<XiPoint> = points.iter().filter(|pt| pt.window_mu() == Some(mu)).copied().collect();
    let values = points.iter().map(|pt| counterterm_at(mu, pt, gamma, p, f)).collect::<Result<_>>()?;
    Ok(Counterterm { mu, gamma, points, values })
}

/// `Lj^R_mu` on the points of a counterterm.
#[derive(Debug, Clone)]
pub struct ResummedPropagator {
    pub mu: i64,
    pub points: Vec<XiPoint>,
    pub values: Vec<Complex64>,
    /// Pointwise `|1 - M_mu Lj_mu|`.
    pub margins: Vec<f64>,
    /// Infimum of `margins`.
    pub margin: f64,
}

/// `(Lj / (1 - M Lj), |1 - M Lj|)` for a given counterterm value; evaluated as
/// `1 / (1/Lj - M)` so the singular point itself is admissible.
pub fn resum_point(mu: i64, pt: &XiPoint, m: Complex64, p: &ModelParams) -> (Complex64, f64) {
    match inv_j_window(pt, p) {
        Some(inv) if pt.window_mu() == Some(mu) => {
            let den = inv - m;
            let margin = if inv == Complex64::new(0.0, 0.0) { f64::INFINITY } else { den.norm() / inv.norm() };
            (1.0 / den, margin)
        }
        _ => (Complex64::new(0.0, 0.0), 1.0),
    }
}

pub fn resummed_l(ct: &Counterterm, p: &ModelParams, margin_floor: f64) -> Result<ResummedPropagator> {
    let mut values = Vec::with_capacity(ct.points.len());
    let mut margins = Vec::with_capacity(ct.points.len());
    let mut inf = f64::INFINITY;
    for (pt, &m) in ct.points.iter().zip(&ct.values) {
        let (v, margin) = resum_point(ct.mu, pt, m, p);
        if margin < margin_floor {
            return Err(Error::Stability { mu: ct.mu, xi: pt.xi, gamma: ct.gamma, margin, floor: margin_floor });
        }
        inf = inf.min(margin);
        values.push(v);
        margins.push(margin);
    }
    Ok(ResummedPropagator { mu: ct.mu, points: ct.points.clone(), values, margins, margin: inf })
}

/// `Lj^R_mu` at one point with the stability check.
pub fn resummed_l_at(
    mu: i64,
    pt: &XiPoint,
    gamma: f64,
    p: &ModelParams,
    f: &ForcingSpec,
    margin_floor: f64,
) -> Result<Complex64> {
    if pt.window_mu() != Some(mu) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = counterterm_at(mu, pt, gamma, p, f)?;
    let (v, margin) = resum_point(mu, pt, m, p);
    if margin < margin_floor {
        return Err(Error::Stability { mu, xi: pt.xi, gamma, margin, floor: margin_floor });
    }
    Ok(v)
}

/// `inf |1 - M_mu Lj_mu|` over the window points among `points`.
pub fn stability_margin(mu: i64, gamma: f64, p: &ModelParams, f: &ForcingSpec, points: &[XiPoint]) -> Result<f64> {
    let ct = counterterm(mu, points, gamma, f, p)?;
    Ok(ct
        .points
        .iter()
        .zip(&ct.values)
        .map(|(pt, &m)| resum_point(mu, pt, m, p).1)
        .fold(f64::INFINITY, f64::min))
}

/// `sup |Lj^R_mu|` over the window points among `points`, including the limit at
/// the singular point itself.
pub fn sup_resummed(mu: i64, gamma: f64, p: &ModelParams, f: &ForcingSpec, points: &[XiPoint]) -> Result<f64> {
    let mut pts: Vec<XiPoint> = points.to_vec();
    if mu == 0 {
        pts.push(XiPoint::at_offset(0, 1.0, 0.0, p));
        pts.push(XiPoint::at_offset(0, -1.0, 0.0, p));
    } else {
        pts.push(XiPoint::at_offset(mu, 0.0, 0.0, p));
    }
    let ct = counterterm(mu, &pts, gamma, f, p)?;
    Ok(ct
        .points
        .iter()
        .zip(&ct.values)
        .map(|(pt, &m)| resum_point(mu, pt, m, p).0.norm())
        .fold(0.0, f64::max))
}

/// Bound on `|Lj^R|` in each of the three forcing regimes, with prefactor `c`.
pub fn t_bound(gamma: f64, p: &ModelParams, f: &ForcingSpec, c: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    let e = forcing_extremes(f, p.alpha);
    Ok(match forcing_case(f, p.alpha)? {
        ForcingCase::Offset => c / (gamma * f.v0().norm()),
        ForcingCase::InBand => c * (p.alpha / p.eps).sqrt() / (gamma * gamma * e.v_low_inband.powi(2)),
        ForcingCase::OutOfBand => c * p.alpha.sqrt() / (gamma * gamma * e.v_bar_outband.powi(2)),
    })
}

/// `(d, s)` at a window point:
/// `d = |D - gamma^2 (K1 - K~2) - i (gamma V_0 + gamma^2 K1)|`,
/// `s = |D + gamma^2 K1 - i (gamma V_0 + gamma^2 (K1 - K~2))|`.
pub fn ds_at(mu: i64, pt: &XiPoint, gamma: f64, p: &ModelParams, f: &ForcingSpec) -> (f64, f64) {
    let d = d_at(mu, pt, p);
    let (k1, _, k2t) = k_sums(mu, pt, p, f);
    let v0 = f.v0().re;
    let g2 = gamma * gamma;
    let dd = Complex64::new(d - g2 * (k1 - k2t), -(gamma * v0 + g2 * k1)).norm();
    let ss = Complex64::new(d + g2 * k1, -(gamma * v0 + g2 * (k1 - k2t))).norm();
    (dd, ss)
}

/// `(inf d, inf s)` over the window points among `points`.
pub fn ds_margins(mu: i64, points: &[XiPoint], gamma: f64, p: &ModelParams, f: &ForcingSpec) -> (f64, f64) {
    points
        .iter()
        .filter(|pt| pt.window_mu() == Some(mu))
        .map(|pt| ds_at(mu, pt, gamma, p, f))
        .fold((f64::INFINITY, f64::INFINITY), |(a, b), (d, s)| (a.min(d), b.min(s)))
}

/// Expected `G_{mu,k}` on the window of `mu >= 1` from the explicit case table,
/// written through `D` and `A` only.
pub fn g_case_table(mu: i64, k: i64, pt: &XiPoint, p: &ModelParams) -> Result<Complex64> {
    assert!(mu >= 1 && k >= 1);
    let w = pt.window.filter(|w| w.mu == mu).ok_or_else(|| invalid("xi", format!("{} is outside the window of {mu}", pt.xi)))?;
    let ks = p.k_singular();
    let dm = d_at(mu, pt, p);
    let dp = d_at(mu + k, pt, p);
    let dn = d_at(mu - k, pt, p);
    let a = 1.0 / dn - 1.0 / dp;
    Ok(if w.s > 0.0 {
        if k <= ks {
            Complex64::new(-1.0 / (dm * dp), 1.0 / (dm * dn))
        } else {
            Complex64::new(a / dm, 0.0)
        }
    } else if k <= ks {
        Complex64::new(1.0 / (dm * dn), 1.0 / (dm * dp))
    } else {
        Complex64::new(0.0, -a / dm)
    })
}

/// `G_{mu,k}` straight from its definition.
pub fn g_direct(mu: i64, k: i64, pt: &XiPoint, p: &ModelParams) -> Result<Complex64> {
    Ok((rj_at(mu + k, pt, p)? + rj_at(mu - k, pt, p)?) * lj_at(mu, pt, p)?)
}
