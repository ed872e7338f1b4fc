//! Closed-form propagators `j_k`, the geometry of their singular points and the
//! split of each propagator into a part localised near its singularity and a
//! bounded remainder.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::params::ModelParams;

/// Points with `|1 - |tau|| below this are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Bessel function of the first kind of integer order.
pub fn bessel_j(n: u32, t: f64) -> f64 {
    match n {
        0 => libm::j0(t),
        1 => libm::j1(t),
        _ => libm::jn(n as i32, t),
    }
}

/// `|1 - tau^2|` without cancellation near `|tau| = 1`.
fn gap(tau: f64) -> f64 {
    (1.0 - tau.abs()).abs() * (1.0 + tau.abs())
}

/// `j(tau) = [chi(|tau| <= 1) + i sign(tau) chi(|tau| > 1)] / sqrt|1 - tau^2|`,
/// the Fourier-Laplace transform of `J_0`.
pub fn j_closed(tau: f64) -> Result<Complex64> {
    j_closed_tol(tau, SINGULAR_TOL)
}

pub fn j_closed_tol(tau: f64, tol: f64) -> Result<Complex64> {
    if (1.0 - tau.abs()).abs() <= tol {
        return Err(Error::SingularPoint { tau });
    }
    Ok(phase(tau) / gap(tau).sqrt())
}

fn phase(tau: f64) -> Complex64 {
    if tau.abs() <= 1.0 {
        Complex64::new(1.0, 0.0)
    } else {
        I * tau.signum()
    }
}

/// How a propagator value arises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorClass {
    /// `|k| > 2 alpha`: no singular point in the band.
    Regular,
    /// Singular momentum, `xi` inside its window.
    LocalizedWindow,
    /// Singular momentum, `xi` away from its window.
    SingularPoint,
}

impl PropagatorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Regular => "regular",
            Self::LocalizedWindow => "localized-window",
            Self::SingularPoint => "singular-point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorValue {
    pub value: Complex64,
    pub class: PropagatorClass,
}

/// Singular abscissae and window radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowGeometry {
    pub alpha: f64,
    pub r: f64,
    pub k_singular: i64,
}

impl WindowGeometry {
    pub fn new(p: &ModelParams) -> Self {
        Self { alpha: p.alpha, r: p.r, k_singular: p.k_singular() }
    }

    /// `sign(k) - k/alpha`; the band edge `1` for `k = 0`.
    pub fn xi(&self, k: i64) -> f64 {
        if k == 0 {
            1.0
        } else {
            k.signum() as f64 - k as f64 / self.alpha
        }
    }

    /// Companion root `sign(k) + k/alpha`, so that `j_k` blows up at `xi_k` and `-xi*_k`;
    /// `1` for `k = 0`.
    pub fn xi_star(&self, k: i64) -> f64 {
        if k == 0 {
            1.0
        } else {
            k.signum() as f64 + k as f64 / self.alpha
        }
    }

    /// Singular points inside the band: `(k, xi_k)` for `0 < |k| <= floor(2 alpha)`
    /// plus the two band edges for `k = 0`, sorted by abscissa.
    pub fn singular_points(&self) -> Vec<(i64, f64)> {
        let mut v: Vec<(i64, f64)> = (-self.k_singular..=self.k_singular)
            .filter(|&k| k != 0)
            .map(|k| (k, self.xi(k)))
            .collect();
        v.push((0, -1.0));
        v.push((0, 1.0));
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    /// Smallest distance between singular points of distinct momenta.
    pub fn min_spacing(&self) -> f64 {
        let ks = self.k_singular;
        let mut m = f64::INFINITY;
        for k in -ks..=ks {
            for kp in -ks..=ks {
                if k != kp {
                    m = m.min((self.xi(k) - self.xi(kp)).abs());
                }
            }
        }
        m
    }

    /// Window membership: the window of `k = 0` is the pair of edge strips.
    pub fn in_window(&self, k: i64, xi: f64) -> bool {
        if k == 0 {
            xi > 1.0 - self.r || xi < -1.0 + self.r
        } else {
            (xi - self.xi(k)).abs() < self.r
        }
    }

    /// The momentum whose window contains `xi`, with the tau-anchor `+-1` and the offset.
    pub fn window_of(&self, xi: f64) -> Option<WindowOffset> {
        if xi > 1.0 - self.r {
            return Some(WindowOffset { mu: 0, anchor: 1.0, s: xi - 1.0 });
        }
        if xi < -1.0 + self.r {
            return Some(WindowOffset { mu: 0, anchor: -1.0, s: xi + 1.0 });
        }
        let ks = self.k_singular;
        (-ks..=ks).filter(|&k| k != 0).find_map(|k| {
            let s = xi - self.xi(k);
            (s.abs() < self.r).then_some(WindowOffset { mu: k, anchor: k.signum() as f64, s })
        })
    }
}

/// `xi_k > xi_k'` decided from the momenta alone (both nonzero).
pub fn xi_order(k: i64, kp: i64, alpha: f64) -> bool {
    let d = (kp - k) as f64;
    (kp > k && k > 0)
        || (k < kp && kp < 0)
        || (kp > 0 && k < 0 && d > 2.0 * alpha)
        || (kp < 0 && k > 0 && d > -2.0 * alpha)
}

/// `xi_k > 0` decided from the momentum alone (nonzero).
pub fn xi_positive(k: i64, alpha: f64) -> bool {
    let k = k as f64;
    k < -alpha || (0.0 < k && k < alpha)
}

/// Position of an evaluation point inside a window, measured from the singular point.
///
/// `tau = anchor + s` for the window momentum, so the propagator of that momentum
/// is evaluated from `s` directly and stays accurate arbitrarily close to the
/// singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOffset {
    pub mu: i64,
    pub anchor: f64,
    pub s: f64,
}

/// Evaluation abscissa, carrying the exact offset when it lies in a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiPoint {
    pub xi: f64,
    pub window: Option<WindowOffset>,
}

impl XiPoint {
    pub fn new(xi: f64, p: &ModelParams) -> Self {
        Self { xi, window: WindowGeometry::new(p).window_of(xi) }
    }

    /// Point at offset `s` from the singular point of `mu` (`anchor` picks the band
    /// edge when `mu = 0`).
    pub fn at_offset(mu: i64, anchor: f64, s: f64, p: &ModelParams) -> Self {
        let anchor = if mu == 0 { anchor.signum() } else { mu.signum() as f64 };
        let xi = anchor - mu as f64 / p.alpha + s;
        Self { xi, window: Some(WindowOffset { mu, anchor, s }) }
    }

    pub fn window_mu(&self) -> Option<i64> {
        self.window.map(|w| w.mu)
    }
}

/// Phase of `j` at `tau = anchor + s`, from the side of the offset so that it
/// survives `anchor + s` rounding to `anchor`.
fn offset_phase(anchor: f64, s: f64) -> Complex64 {
    if anchor * s > 0.0 {
        I * anchor.signum()
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// `|1 - tau^2|` at `tau = anchor + s`.
fn offset_gap(anchor: f64, s: f64) -> f64 {
    s.abs() * (2.0 * anchor + s).abs()
}

/// `j_k(xi) = j(xi + k/alpha) / alpha`.
pub fn j_k_of_xi(k: i64, xi: f64, p: &ModelParams) -> Result<PropagatorValue> {
    let value = j_closed(xi + k as f64 / p.alpha)? / p.alpha;
    Ok(PropagatorValue { value, class: classify(k, xi, p) })
}

fn classify(k: i64, xi: f64, p: &ModelParams) -> PropagatorClass {
    if !p.is_singular_momentum(k) {
        PropagatorClass::Regular
    } else if WindowGeometry::new(p).in_window(k, xi) {
        PropagatorClass::LocalizedWindow
    } else {
        PropagatorClass::SingularPoint
    }
}

/// `j_k` for `k != 0` written through its singular points:
/// `[chi(sign(k)(xi - xi_k) <= 0) + i sign(k) chi(sign(k)(xi - xi_k) > 0)] / D_k(xi)`.
pub fn j_k_chi_form(k: i64, xi: f64, p: &ModelParams) -> Result<Complex64> {
    assert!(k != 0, "the chi form needs k != 0");
    let g = WindowGeometry::new(p);
    let d = d_k(k, xi, p);
    if d == 0.0 {
        return Err(Error::SingularPoint { tau: xi + k as f64 / p.alpha });
    }
    let side = k.signum() as f64 * (xi - g.xi(k));
    let ph = if side <= 0.0 { Complex64::new(1.0, 0.0) } else { I * k.signum() as f64 };
    Ok(ph / d)
}

/// `D_k(xi) = alpha sqrt|(xi - xi_k)(xi + xi*_k)| = 1 / |j_k(xi)|`.
pub fn d_k(k: i64, xi: f64, p: &ModelParams) -> f64 {
    p.alpha * gap(xi + k as f64 / p.alpha).sqrt()
}

/// `(Lj_k, Rj_k)`: the propagator restricted to its window and the remainder.
pub fn localize(k: i64, xi: f64, p: &ModelParams) -> Result<(Complex64, Complex64)> {
    let v = j_k_of_xi(k, xi, p)?.value;
    let zero = Complex64::new(0.0, 0.0);
    if WindowGeometry::new(p).in_window(k, xi) {
        Ok((v, zero))
    } else {
        Ok((zero, v))
    }
}

/// `j_k` at an evaluation point.
pub fn j_at(k: i64, pt: &XiPoint, p: &ModelParams) -> Result<Complex64> {
    match pt.window {
        Some(w) if w.mu == k => {
            let gap = offset_gap(w.anchor, w.s);
            if gap == 0.0 {
                return Err(Error::SingularPoint { tau: w.anchor });
            }
            Ok(offset_phase(w.anchor, w.s) / (p.alpha * gap.sqrt()))
        }
        _ => Ok(j_k_of_xi(k, pt.xi, p)?.value),
    }
}

/// `1 / j_k` for the window momentum of the point; finite at the singular point itself.
pub fn inv_j_window(pt: &XiPoint, p: &ModelParams) -> Option<Complex64> {
    pt.window.map(|w| p.alpha * offset_gap(w.anchor, w.s).sqrt() * offset_phase(w.anchor, w.s).conj())
}

/// `D_k` at an evaluation point.
pub fn d_at(k: i64, pt: &XiPoint, p: &ModelParams) -> f64 {
    match pt.window {
        Some(w) if w.mu == k => p.alpha * offset_gap(w.anchor, w.s).sqrt(),
        _ => d_k(k, pt.xi, p),
    }
}

/// `Lj_k` at an evaluation point.
pub fn lj_at(k: i64, pt: &XiPoint, p: &ModelParams) -> Result<Complex64> {
    if pt.window_mu() == Some(k) {
        j_at(k, pt, p)
    } else {
        Ok(Complex64::new(0.0, 0.0))
    }
}

/// `Rj_k` at an evaluation point.
pub fn rj_at(k: i64, pt: &XiPoint, p: &ModelParams) -> Result<Complex64> {
    if pt.window_mu() == Some(k) {
        Ok(Complex64::new(0.0, 0.0))
    } else {
        j_at(k, pt, p)
    }
}

/// Auxiliary functions on the window of `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFunctions {
    /// `D_mu`
    pub d: f64,
    /// `A_{mu,k} = 1/D_{mu-k} - 1/D_{mu+k}`
    pub a: f64,
    /// `G_{mu,k} = (Rj_{mu+k} + Rj_{mu-k}) Lj_mu`
    pub g: Complex64,
    /// `sum_{1 <= k <= floor(2 alpha)} |V_k|^2 / D_{mu-k}`
    pub k1: f64,
    /// `sum_{k > 2 alpha} |V_k|^2 A_{mu,k}`
    pub k2: f64,
    /// `sum_{k >= 1} |V_k|^2 A_{mu,k}`
    pub k2_tilde: f64,
}

/// `A_{mu,k}` at a point.
pub fn a_at(mu: i64, k: i64, pt: &XiPoint, p: &ModelParams) -> f64 {
    1.0 / d_at(mu - k, pt, p) - 1.0 / d_at(mu + k, pt, p)
}

/// `(K1, K2, K~2)` at a point of the window of `mu`. For `mu < 0` the momenta
/// `k` and `-k` trade places, mirroring the sums of `-mu` at `-xi`.
pub fn k_sums(mu: i64, pt: &XiPoint, p: &ModelParams, f: &ForcingSpec) -> (f64, f64, f64) {
    let s = if mu < 0 { -1 } else { 1 };
    let ks = p.k_singular();
    let (mut k1, mut k2, mut k2t) = (0.0, 0.0, 0.0);
    for (k, v) in f.modes().filter(|&(k, _)| k >= 1) {
        let w = v.norm_sqr();
        let a = a_at(mu, s * k, pt, p);
        k2t += w * a;
        if k <= ks {
            k1 += w / d_at(mu - s * k, pt, p);
        } else {
            k2 += w * a;
        }
    }
    (k1, k2, k2t)
}

pub fn window_functions_at(
    mu: i64,
    k: i64,
    pt: &XiPoint,
    p: &ModelParams,
    f: &ForcingSpec,
) -> Result<WindowFunctions> {
    let g = (rj_at(mu + k, pt, p)? + rj_at(mu - k, pt, p)?) * lj_at(mu, pt, p)?;
    let (k1, k2, k2_tilde) = k_sums(mu, pt, p, f);
    Ok(WindowFunctions { d: d_at(mu, pt, p), a: a_at(mu, k, pt, p), g, k1, k2, k2_tilde })
}

/// [`window_functions_at`] for a plain abscissa.
pub fn window_functions(
    mu: i64,
    k: i64,
    xi: f64,
    p: &ModelParams,
    f: &ForcingSpec,
) -> Result<WindowFunctions> {
    let pt = XiPoint::new(xi, p);
    for m in [mu, mu + k, mu - k] {
        j_at(m, &pt, p)?;
    }
    window_functions_at(mu, k, &pt, p, f)
}
