//! Periodic forcing profiles given by their Fourier coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;
use crate::error::{invalid, Result};

const REALITY_TOL: f64 = 1e-12;

/// Fourier coefficients `V_k` of a real periodic profile `V(phi) = sum_k V_k e^{ik phi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    coefficients: BTreeMap<i64, Complex64>,
    /// Exponential decay rate of the coefficient bound.
    pub sigma: f64,
    /// Prefactor of the coefficient bound `|V_k| <= c0 e^{-sigma |k|}`.
    pub c0_bound: f64,
}

impl ForcingSpec {
    /// Validates reality `V_{-k} = conj(V_k)` and the bound `|V_k| <= c0 e^{-sigma|k|}`.
    pub fn new(coefficients: BTreeMap<i64, Complex64>, sigma: f64, c0_bound: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        if !(c0_bound > 0.0 && c0_bound.is_finite()) {
            return Err(invalid("c0_bound", format!("must be finite and > 0, got {c0_bound}")));
        }
        let coefficients: BTreeMap<i64, Complex64> =
            coefficients.into_iter().filter(|(_, v)| *v != Complex64::new(0.0, 0.0)).collect();
        for (&k, &v) in &coefficients {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(invalid("coefficients", format!("V_{k} is not finite")));
            }
            let partner = coefficients.get(&-k).copied().unwrap_or_default();
            if (partner - v.conj()).norm() > REALITY_TOL * (1.0 + v.norm()) {
                return Err(invalid(
                    "coefficients",
                    format!("reality violated: V_{} != conj(V_{})", -k, k),
                ));
            }
            let bound = c0_bound * (-sigma * k.unsigned_abs() as f64).exp();
            if v.norm() > bound * (1.0 + 1e-12) {
                return Err(invalid(
                    "coefficients",
                    format!("|V_{k}| = {} exceeds the bound {bound}", v.norm()),
                ));
            }
        }
        Ok(Self { coefficients, sigma, c0_bound })
    }

    /// `cos(phi)`: `V_{+-1} = 1/2`.
    pub fn cosine() -> Self {
        Self::cosine_mode(1, 1.0)
    }

    /// `amp * cos(K phi)`.
    pub fn cosine_mode(k: i64, amp: f64) -> Self {
        let mut c = BTreeMap::new();
        c.insert(k, Complex64::new(amp / 2.0, 0.0));
        c.insert(-k, Complex64::new(amp / 2.0, 0.0));
        Self::from_map(c)
    }

    /// `v0 + amp * cos(phi)`.
    pub fn offset_cosine(v0: f64, amp: f64) -> Self {
        let mut c = BTreeMap::new();
        c.insert(0, Complex64::new(v0, 0.0));
        c.insert(1, Complex64::new(amp / 2.0, 0.0));
        c.insert(-1, Complex64::new(amp / 2.0, 0.0));
        Self::from_map(c)
    }

    /// Real symmetric profile with `V_k = c0 e^{-sigma |k|}` for `|k| <= k_max`.
    pub fn exponential(c0: f64, sigma: f64, k_max: i64) -> Result<Self> {
        let c = (-k_max..=k_max)
            .map(|k| (k, Complex64::new(c0 * (-sigma * k.abs() as f64).exp(), 0.0)))
            .collect();
        Self::new(c, sigma, c0.abs().max(f64::MIN_POSITIVE))
    }

    /// Builds from a table of `(k, re, im)` rows.
    pub fn from_table(rows: &[(i64, f64, f64)], sigma: f64, c0_bound: f64) -> Result<Self> {
        let mut c = BTreeMap::new();
        for &(k, re, im) in rows {
            if c.insert(k, Complex64::new(re, im)).is_some() {
                return Err(invalid("coefficients", format!("mode {k} listed twice")));
            }
        }
        Self::new(c, sigma, c0_bound)
    }

    fn from_map(c: BTreeMap<i64, Complex64>) -> Self {
        let c0 = c.values().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Self::new(c, 0.0, c0).expect("well-formed profile")
    }

    /// `V(-phi)`: coefficients `V_{-k}`.
    pub fn reflected(&self) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|(&k, &v)| (-k, v)).collect(),
            ..self.clone()
        }
    }

    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.coefficients.get(&k).copied().unwrap_or_default()
    }

    pub fn v0(&self) -> Complex64 {
        self.coefficient(0)
    }

    /// Nonzero modes in increasing order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coefficients.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Largest `|k|` carrying a nonzero coefficient.
    pub fn k_support(&self) -> i64 {
        self.coefficients.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// `sum_k |V_k|^2`, the squared L2 norm over one period (normalised measure).
    pub fn l2_norm_sq(&self) -> f64 {
        self.coefficients.values().map(|v| v.norm_sqr()).sum()
    }

    /// `V(phi)`.
    pub fn eval(&self, phi: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(&k, v)| (v * Complex64::cis(k as f64 * phi)).re)
            .sum()
    }
}
