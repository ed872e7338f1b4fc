//! Model parameters, the Diophantine gap of the drive, forcing extremes and the
//! coupling threshold below which the resummed series is controlled.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forcing::ForcingSpec;

/// Tolerance under which `2g/omega` counts as an integer.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Physical couplings and the derived dimensionless quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g: f64,
    pub h: f64,
    pub omega: f64,
    /// `g / omega`
    pub alpha: f64,
    /// `h / omega`
    pub gamma: f64,
    /// Distance of `2 alpha` to the nearest integer.
    pub eps_bar: f64,
    /// Half-width parameter of the windows, `eps_bar / 2` unless overridden.
    pub eps: f64,
    /// Window radius, `eps / (8 alpha)` unless overridden.
    pub r: f64,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// `min_k |2g/omega - k|` over the two integers bracketing `2g/omega` (0 included).
pub fn diophantine_gap(g: f64, omega: f64) -> Result<f64> {
    check_positive("g", g)?;
    check_positive("omega", omega)?;
    let x = 2.0 * g / omega;
    let lo = x.floor();
    Ok((x - lo).min(lo + 1.0 - x))
}

/// Validates the couplings and derives `alpha`, `gamma`, `eps_bar`, `eps` and `r`.
pub fn derive_params(g: f64, h: f64, omega: f64) -> Result<ModelParams> {
    let p = ModelParams::unchecked(g, h, omega)?;
    if p.eps_bar < RESONANCE_TOL * (2.0 * p.alpha).max(1.0) {
        let ratio = 2.0 * p.alpha;
        return Err(Error::Resonance { ratio, k: ratio.round() as i64 });
    }
    Ok(p)
}

impl ModelParams {
    /// Same as [`derive_params`] without rejecting a resonant drive.
    pub fn unchecked(g: f64, h: f64, omega: f64) -> Result<Self> {
        check_positive("g", g)?;
        check_positive("omega", omega)?;
        if !h.is_finite() {
            return Err(invalid("h", format!("must be finite, got {h}")));
        }
        let eps_bar = diophantine_gap(g, omega)?;
        let alpha = g / omega;
        let eps = eps_bar / 2.0;
        Ok(Self { g, h, omega, alpha, gamma: h / omega, eps_bar, eps, r: eps / (8.0 * alpha) })
    }

    /// Dimensionless form: `omega = 1`, `g = alpha`, `h = gamma`.
    pub fn dimensionless(alpha: f64, gamma: f64) -> Result<Self> {
        derive_params(alpha, gamma, 1.0)
    }

    /// Same drive with a different coupling `h = gamma * omega`.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { h: gamma * self.omega, gamma, ..*self }
    }

    /// Overrides `eps`, resetting `r` to `eps / (8 alpha)`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < self.eps_bar) {
            return Err(invalid("eps", format!("need 0 < eps < eps_bar = {}, got {eps}", self.eps_bar)));
        }
        Ok(Self { eps, r: eps / (8.0 * self.alpha), ..*self })
    }

    /// Overrides the window radius; it must stay below `eps / (4 alpha)` so windows never meet.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        let limit = self.eps / (4.0 * self.alpha);
        if !(r > 0.0 && r < limit) {
            return Err(invalid("r", format!("need 0 < r < {limit}, got {r}")));
        }
        Ok(Self { r, ..*self })
    }

    /// `floor(2 alpha)`: the largest momentum whose propagator is singular inside the band.
    pub fn k_singular(&self) -> i64 {
        (2.0 * self.alpha).floor() as i64
    }

    pub fn is_singular_momentum(&self, k: i64) -> bool {
        k.abs() <= self.k_singular()
    }
}

/// Free constants that the analysis leaves unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    /// Prefactor of the resummed-propagator bound.
    pub c: f64,
    /// Prefactor of the coupling threshold, `gamma_0 = c1 * gamma_1`.
    pub c1: f64,
    /// Smallest admissible `|1 - M Lj|` on the windows.
    pub margin_floor: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c: 1.0, c1: 1.0, margin_floor: 0.45 }
    }
}

/// Sizes of the forcing coefficients entering the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingExtremes {
    /// `max_{k != 0} |V_k|^2`
    pub v_bar: f64,
    /// Smallest nonzero `|V_k|` with `1 <= |k| <= floor(2 alpha)`, or 0.
    pub v_low_inband: f64,
    /// Largest `|V_k|` with `|k| > 2 alpha`.
    pub v_bar_outband: f64,
}

pub fn forcing_extremes(forcing: &ForcingSpec, alpha: f64) -> ForcingExtremes {
    let ks = (2.0 * alpha).floor() as i64;
    let mut e = ForcingExtremes { v_bar: 0.0, v_low_inband: 0.0, v_bar_outband: 0.0 };
    let mut low = f64::INFINITY;
    for (k, v) in forcing.modes().filter(|&(k, _)| k != 0) {
        let a = v.norm();
        e.v_bar = e.v_bar.max(a * a);
        if k.abs() <= ks {
            low = low.min(a);
        } else {
            e.v_bar_outband = e.v_bar_outband.max(a);
        }
    }
    if low.is_finite() {
        e.v_low_inband = low;
    }
    e
}

/// Which of the three regimes of the threshold applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingCase {
    /// `V_0 != 0`
    Offset,
    /// `V_0 = 0`, some in-band mode `1 <= |k| <= floor(2 alpha)` present.
    InBand,
    /// Only modes with `|k| > 2 alpha`.
    OutOfBand,
}

pub fn forcing_case(forcing: &ForcingSpec, alpha: f64) -> Result<ForcingCase> {
    if forcing.is_zero() {
        return Err(Error::UndefinedThreshold);
    }
    if forcing.v0().norm() > 0.0 {
        return Ok(ForcingCase::Offset);
    }
    if forcing_extremes(forcing, alpha).v_low_inband > 0.0 {
        Ok(ForcingCase::InBand)
    } else {
        Ok(ForcingCase::OutOfBand)
    }
}

/// Returns `(gamma_1, gamma_0 = c1 * gamma_1)`.
pub fn gamma_threshold(params: &ModelParams, forcing: &ForcingSpec, c1: f64) -> Result<(f64, f64)> {
    check_positive("c1", c1)?;
    let (a, eb) = (params.alpha, params.eps_bar);
    let cube = ((a * eb).sqrt() / 4.0).powi(3);
    let e = forcing_extremes(forcing, a);
    let g1 = match forcing_case(forcing, a)? {
        ForcingCase::Offset => {
            let v0 = forcing.v0().norm();
            (v0 * cube).cbrt().min((eb / (2.0 * a)).sqrt() * v0 / forcing.l2_norm_sq())
        }
        ForcingCase::InBand => cube * (eb / (2.0 * a)).sqrt() * e.v_low_inband.powi(2),
        ForcingCase::OutOfBand => cube * e.v_bar_outband.powi(2) / a.sqrt(),
    };
    Ok((g1, c1 * g1))
}

/// Isolated eigenvalue of the static problem, `g sign(h) sqrt(1 + h^2/g^2)`.
pub fn static_eigenvalue(g: f64, h: f64) -> Result<f64> {
    check_positive("g", g)?;
    if h == 0.0 {
        return Err(Error::NoIsolatedEigenvalue);
    }
    if !h.is_finite() {
        return Err(invalid("h", format!("must be finite, got {h}")));
    }
    Ok(g.hypot(h).copysign(h))
}
