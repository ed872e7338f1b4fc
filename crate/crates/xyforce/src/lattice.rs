//! Transform between the band variable `xi = cos q` and lattice sites `x`.
//!
//! `psi(x) = (1/pi) int_0^pi cos(q x) psi(cos q) dq`, evaluated with the midpoint
//! rule on `q_j = (j + 1/2) pi / n`. On that grid the sites `|x| < n` form an
//! exactly orthogonal set, so the discrete transform inverts and preserves norms.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::midpoint_q;

/// Relative tail mass tolerated beyond the requested range.
pub const TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeProfile {
    pub x_max: usize,
    /// `values[x + x_max]` for `x = -x_max..=x_max`.
    pub values: Vec<Complex64>,
    /// `sqrt(sum_x |psi(x)|^2)` over all resolvable sites.
    pub norm_l2: f64,
    /// Relative mass outside `|x| <= x_max`.
    pub tail_mass: f64,
}

impl LatticeProfile {
    pub fn at(&self, x: i64) -> Complex64 {
        if x.unsigned_abs() as usize > self.x_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(x + self.x_max as i64) as usize]
        }
    }

    /// `psi(cos q) = sum_x psi(x) cos(q x)`.
    pub fn synthesize(&self, q: f64) -> Complex64 {
        (-(self.x_max as i64)..=self.x_max as i64).map(|x| self.at(x) * (q * x as f64).cos()).sum()
    }
}

fn site_value(values: &[Complex64], qs: &[f64], x: usize) -> Complex64 {
    let n = values.len() as f64;
    values.iter().zip(qs).map(|(v, q)| v * (q * x as f64).cos()).sum::<Complex64>() / n
}

/// Lattice profile from samples on the midpoint `q`-grid; fails when the mass
/// beyond `x_max` exceeds [`TAIL_TOL`] of the total.
pub fn to_lattice(values: &[Complex64], x_max: usize) -> Result<LatticeProfile> {
    let p = to_lattice_unchecked(values, x_max)?;
    if p.tail_mass > TAIL_TOL {
        return Err(Error::LatticeTail { x_max, tail: p.tail_mass, tol: TAIL_TOL });
    }
    Ok(p)
}

/// [`to_lattice`] without the tail check; the tail is still reported.
pub fn to_lattice_unchecked(values: &[Complex64], x_max: usize) -> Result<LatticeProfile> {
    let n = values.len();
    if n == 0 {
        return Err(invalid("values", "empty sample"));
    }
    let x_max = x_max.min(n - 1);
    let qs = midpoint_q(n);
    let half: Vec<Complex64> = (0..=x_max).map(|x| site_value(values, &qs, x)).collect();
    let mut vals: Vec<Complex64> = half[1..].iter().rev().copied().collect();
    vals.extend_from_slice(&half);
    // discrete Parseval: (1/n) sum_j |psi_j|^2 = sum over all resolvable sites
    let total: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
    let kept: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
    let tail_mass = if total > 0.0 { ((total - kept) / total).max(0.0) } else { 0.0 };
    Ok(LatticeProfile { x_max, values: vals, norm_l2: total.sqrt(), tail_mass })
}

/// Fraction of `sum_x |psi(x)|^2` carried by `|x| > cutoff`.
pub fn l2_tail(profile: &LatticeProfile, cutoff: usize) -> f64 {
    let norm2 = profile.norm_l2 * profile.norm_l2;
    if norm2 == 0.0 {
        return 0.0;
    }
    let inner: f64 = (-(cutoff.min(profile.x_max) as i64)..=cutoff.min(profile.x_max) as i64)
        .map(|x| profile.at(x).norm_sqr())
        .sum();
    ((norm2 - inner) / norm2).max(0.0)
}

/// Profiles of several harmonics of one solution; the tail check applies to the
/// mass summed over harmonics, the time average of `sum_x |psi(x, t)|^2`.
pub fn to_lattice_harmonics(harmonics: &[Vec<Complex64>], x_max: usize) -> Result<Vec<LatticeProfile>> {
    let profiles: Vec<LatticeProfile> =
        harmonics.iter().map(|h| to_lattice_unchecked(h, x_max)).collect::<Result<_>>()?;
    let total: f64 = profiles.iter().map(|p| p.norm_l2 * p.norm_l2).sum();
    let tail: f64 = profiles.iter().map(|p| p.tail_mass * p.norm_l2 * p.norm_l2).sum();
    let rel = if total > 0.0 { tail / total } else { 0.0 };
    if rel > TAIL_TOL {
        return Err(Error::LatticeTail { x_max, tail: rel, tol: TAIL_TOL });
    }
    Ok(profiles)
}
