//! Finite-history Volterra equation
//! `psi(t) + i h int_{t0}^t J_0(g(t-s)) e^{i g xi (t-s)} V(omega s) psi(s) ds = 1`,
//! its relaxation towards the periodic solution, and the remainder terms that
//! describe the approach.
//!
//! The series coefficients `psi_mu` multiply `e^{i mu phi}` only after the
//! forcing is reflected, `V(phi) -> V(-phi)`, and `phi -> -phi`: the kernel above
//! maps `e^{i mu omega t}` to `j_{-mu} e^{i mu omega t}`. [`time_coefficients`]
//! performs that bookkeeping.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{power_law, PowerLaw};
use crate::forcing::ForcingSpec;
use crate::oscillatory::BesselExp;
use crate::params::ModelParams;
use crate::propagators::{bessel_j, j_closed, XiPoint};
use crate::reed_series::{assemble_solution, PeriodicSolution, SeriesContext};

const I: Complex64 = Complex64::new(0.0, 1.0);
const LEAF: usize = 64;

#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub xi: f64,
    pub t0: f64,
    pub dt: f64,
    /// `values[n] = psi(t0 + n dt)`
    pub values: Vec<Complex64>,
}

impl VolterraSolution {
    pub fn t1(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + self.dt * n as f64
    }
}

/// Largest admissible step for the given couplings.
pub fn max_step(p: &ModelParams) -> f64 {
    (0.05 / p.g).min(0.05 / p.omega)
}

/// Memory kernel `J_0(g m dt)` with the spectra needed by the block convolution.
/// Shared by every `xi`: the phase `e^{i g xi m dt}` is moved onto the unknowns.
pub struct VolterraKernel {
    pub dt: f64,
    pub steps: usize,
    size: usize,
    bessel: Vec<f64>,
    spectra: Vec<Vec<Complex64>>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl VolterraKernel {
    pub fn new(g: f64, dt: f64, steps: usize) -> Self {
        let size = (steps + 1).next_power_of_two().max(LEAF);
        let bessel: Vec<f64> = (0..size).map(|m| bessel_j(0, g * m as f64 * dt)).collect();
        let mut planner = FftPlanner::new();
        let (mut spectra, mut forward, mut inverse) = (Vec::new(), Vec::new(), Vec::new());
        let mut len = 2 * LEAF;
        while len <= size {
            let fwd = planner.plan_fft_forward(len);
            let mut buf: Vec<Complex64> = bessel[..len].iter().map(|&b| Complex64::new(b, 0.0)).collect();
            fwd.process(&mut buf);
            let scale = 1.0 / len as f64;
            buf.iter_mut().for_each(|z| *z *= scale);
            spectra.push(buf);
            forward.push(fwd);
            inverse.push(planner.plan_fft_inverse(len));
            len *= 2;
        }
        Self { dt, steps, size, bessel, spectra, forward, inverse }
    }

    /// Product-trapezoid solution at `xi` for the drive samples `v[n] = V(omega (t0 + n dt))`.
    pub fn solve(&self, xi: f64, g: f64, h: f64, v: &[f64]) -> Result<Vec<Complex64>> {
        let n = self.steps;
        assert!(v.len() > n);
        let theta = g * xi * self.dt;
        let phase: Vec<Complex64> = (0..=n).map(|m| Complex64::cis(theta * m as f64)).collect();
        let mut st = State {
            k: self,
            n,
            hdt: h * self.dt,
            v,
            phase: &phase,
            conv: vec![Complex64::new(0.0, 0.0); n + 1],
            u: vec![Complex64::new(0.0, 0.0); n + 1],
            psi: vec![Complex64::new(0.0, 0.0); n + 1],
            buf: Vec::new(),
            scratch: Vec::new(),
        };
        st.block(0, self.size);
        let psi = st.psi;
        if let Some(i) = psi.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { t: i as f64 * self.dt });
        }
        Ok(psi)
    }
}

struct State<'a> {
    k: &'a VolterraKernel,
    n: usize,
    hdt: f64,
    v: &'a [f64],
    phase: &'a [Complex64],
    /// demodulated history sums `sum_{m<n} J_0(g(n-m)dt) u_m`
    conv: Vec<Complex64>,
    /// demodulated weighted unknowns `e^{-i theta m} w_m V_m psi_m`
    u: Vec<Complex64>,
    psi: Vec<Complex64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl State<'_> {
    fn block(&mut self, lo: usize, len: usize) {
        if lo > self.n {
            return;
        }
        if len <= LEAF {
            self.leaf(lo, (lo + len).min(self.n + 1));
            return;
        }
        let half = len / 2;
        self.block(lo, half);
        if lo + half <= self.n {
            self.cross(lo, len);
        }
        self.block(lo + half, half);
    }

    fn leaf(&mut self, lo: usize, hi: usize) {
        let b = &self.k.bessel;
        for n in lo..hi {
            let mut c = self.conv[n];
            for m in lo..n {
                c += self.u[m] * b[n - m];
            }
            let psi = if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let hist = self.phase[n] * c;
                (1.0 - I * self.hdt * hist) / (1.0 + I * (0.5 * self.hdt * self.v[n]))
            };
            self.psi[n] = psi;
            let w = if n == 0 { 0.5 } else { 1.0 };
            self.u[n] = self.phase[n].conj() * (w * self.v[n]) * psi;
        }
    }

    /// Adds the contribution of `u[lo..lo+len/2)` to `conv[lo+len/2..lo+len)`:
    /// one cyclic convolution of length `len` whose wrap-around misses the
    /// outputs kept.
    fn cross(&mut self, lo: usize, len: usize) {
        let half = len / 2;
        let level = (len / (2 * LEAF)).trailing_zeros() as usize;
        let fwd = &self.k.forward[level];
        let inv = &self.k.inverse[level];
        self.buf.clear();
        self.buf.extend_from_slice(&self.u[lo..lo + half]);
        self.buf.resize(len, Complex64::new(0.0, 0.0));
        let need = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (z, s) in self.buf.iter_mut().zip(&self.k.spectra[level]) {
            *z *= s;
        }
        inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        let end = (lo + len).min(self.n + 1);
        for idx in lo + half..end {
            self.conv[idx] += self.buf[idx - lo];
        }
    }
}

fn check_inputs(t0: f64, t1: f64, dt: f64, p: &ModelParams) -> Result<usize> {
    let limit = max_step(p);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit });
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid("t1", format!("need finite t1 > t0, got t0 = {t0}, t1 = {t1}")));
    }
    Ok(((t1 - t0) / dt - 1e-9).ceil() as usize)
}

/// Drive samples `V(omega (t0 + n dt))`, `n = 0..=steps`.
pub fn drive_samples(f: &ForcingSpec, omega: f64, t0: f64, dt: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|n| f.eval(omega * (t0 + n as f64 * dt))).collect()
}

/// Solves on `[t0, t1]` with a step no larger than `dt` (shrunk to divide the interval).
pub fn solve_finite_t0(xi: f64, t0: f64, t1: f64, dt: f64, p: &ModelParams, f: &ForcingSpec) -> Result<VolterraSolution> {
    let steps = check_inputs(t0, t1, dt, p)?;
    let dt = (t1 - t0) / steps as f64;
    let kernel = VolterraKernel::new(p.g, dt, steps);
    let v = drive_samples(f, p.omega, t0, dt, steps);
    let values = kernel.solve(xi, p.g, p.h, &v)?;
    Ok(VolterraSolution { xi, t0, dt, values })
}

/// Step-halving check: solutions at `dt`, `dt/2`, `dt/4` compared on the coarse
/// times. Returns `(observed order, error estimate of the finest solution)`.
pub fn richardson_check(xi: f64, t0: f64, t1: f64, dt: f64, p: &ModelParams, f: &ForcingSpec) -> Result<(f64, f64)> {
    let a = solve_finite_t0(xi, t0, t1, dt, p, f)?;
    let b = solve_finite_t0(xi, t0, t1, a.dt / 2.0, p, f)?;
    let c = solve_finite_t0(xi, t0, t1, a.dt / 4.0, p, f)?;
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for (n, za) in a.values.iter().enumerate() {
        e1 = e1.max((za - b.values[2 * n]).norm());
        e2 = e2.max((b.values[2 * n] - c.values[4 * n]).norm());
    }
    Ok(((e1 / e2).log2(), e2 / 3.0))
}

/// `psi_inf`'s coefficients of `e^{i k omega t}` for `|k| <= mu_cap` at point `i`,
/// from a solution assembled with the reflected forcing.
pub fn time_coefficients(sol: &PeriodicSolution, i: usize) -> Vec<Complex64> {
    (-sol.mu_cap..=sol.mu_cap).map(|k| sol.coefficient(i, -k)).collect()
}

/// Periodic solution of the time-domain problem at `points`: the series is
/// assembled for the reflected forcing.
pub fn periodic_limit(points: &[XiPoint], p: &ModelParams, f: &ForcingSpec, n_max: usize, margin_floor: f64) -> Result<PeriodicSolution> {
    let ctx = SeriesContext::new(*p, f.reflected(), p.gamma, margin_floor);
    assemble_solution(points, &ctx, n_max, None)
}

/// `psi_inf(xi_i, t)` for the time-domain problem.
pub fn periodic_value(sol: &PeriodicSolution, i: usize, t: f64, omega: f64) -> Complex64 {
    sol.synthesize(i, -omega * t)
}

/// Configuration of a relaxation measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    pub t0_list: Vec<f64>,
    /// Longest elapsed time `t - t0` simulated.
    pub horizon: f64,
    pub dt: f64,
    /// Fit range of `t - t0`.
    pub window: (f64, f64),
    pub n_max: usize,
    pub margin_floor: f64,
}

/// Per-period maxima of `sup_xi |psi_t0 - psi_inf|` and the power law fitted to them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxationFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    /// RMS of the log residuals.
    pub residual: f64,
    pub exponent_stderr: f64,
    /// Whether the envelope decreases over the window (to 10%).
    pub monotone: bool,
    /// `(t - t0, value)` at each period's maximum.
    pub envelope: Vec<(f64, f64)>,
    /// `sup |psi_t0 - psi_inf|` over the whole run.
    pub max_difference: f64,
}

/// `sum_k c_k w^k` for `c` indexed `k + cap`, `|w| = 1`: two Horner passes, one
/// per sign of `k`, so that a lone constant term comes back exactly.
fn synthesize_harmonics(c: &[Complex64], w: Complex64) -> Complex64 {
    let cap = (c.len() - 1) / 2;
    let horner = |coeffs: &mut dyn Iterator<Item = &Complex64>, z: Complex64| {
        coeffs.fold(Complex64::new(0.0, 0.0), |acc, ck| (acc + ck) * z)
    };
    let pos = horner(&mut c[cap + 1..].iter().rev(), w);
    let neg = horner(&mut c[..cap].iter(), w.conj());
    c[cap] + pos + neg
}

/// Per-period maxima of `|diff|` with the elapsed time where each occurs.
fn period_maxima(diff: impl Iterator<Item = (f64, f64)>, period: f64, blocks: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(f64::NAN, -1.0); blocks];
    for (t, d) in diff {
        let b = ((t / period) as usize).min(blocks - 1);
        if d > out[b].1 {
            out[b] = (t, d);
        }
    }
    out
}

/// Measures how fast the finite-history solution approaches the periodic one.
pub fn relaxation_fit(points: &[XiPoint], cfg: &RelaxationConfig, p: &ModelParams, f: &ForcingSpec) -> Result<RelaxationFit> {
    let (a, b) = cfg.window;
    if !(a > 0.0 && b > a) {
        return Err(invalid("window", format!("need 0 < start < end, got ({a}, {b})")));
    }
    let decades = (b / a).log10();
    if decades < 1.0 {
        return Err(Error::InsufficientDecades { decades, required: 1.0 });
    }
    if cfg.horizon < b {
        return Err(invalid("horizon", format!("{} is shorter than the fit window end {b}", cfg.horizon)));
    }
    let steps = check_inputs(0.0, cfg.horizon, cfg.dt, p)?;
    let dt = cfg.horizon / steps as f64;
    let period = 2.0 * PI / p.omega;
    let blocks = (cfg.horizon / period).ceil() as usize + 1;
    let limit = periodic_limit(points, p, f, cfg.n_max, cfg.margin_floor)?;
    let kernel = VolterraKernel::new(p.g, dt, steps);

    let mut envelope = vec![(f64::NAN, -1.0); blocks];
    for &t0 in &cfg.t0_list {
        let v = drive_samples(f, p.omega, t0, dt, steps);
        let per_point: Vec<Vec<(f64, f64)>> = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let psi = kernel.solve(points[i].xi, p.g, p.h, &v)?;
                let c = time_coefficients(&limit, i);
                let diffs = psi.iter().enumerate().map(|(n, z)| {
                    let t = t0 + n as f64 * dt;
                    let inf = synthesize_harmonics(&c, Complex64::cis(p.omega * t));
                    (n as f64 * dt, (z - inf).norm())
                });
                Ok(period_maxima(diffs, period, blocks))
            })
            .collect::<Result<_>>()?;
        for pm in per_point {
            for (e, q) in envelope.iter_mut().zip(pm) {
                if q.1 > e.1 {
                    *e = q;
                }
            }
        }
    }
    envelope.retain(|e| e.1 >= 0.0);
    let max_difference = envelope.iter().map(|e| e.1).fold(0.0, f64::max);
    let inside: Vec<(f64, f64)> = envelope.iter().copied().filter(|e| e.0 >= a && e.0 <= b).collect();
    let monotone = inside.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = inside.iter().copied().unzip();
    let PowerLaw { exponent, amplitude, exponent_stderr, rms, .. } = if max_difference == 0.0 {
        PowerLaw { exponent: 0.0, amplitude: 0.0, exponent_stderr: 0.0, rms: 0.0, points: 0 }
    } else {
        power_law(&xs, &ys, 0.9)?
    };
    Ok(RelaxationFit {
        exponent,
        amplitude,
        window: (a, b),
        residual: rms,
        exponent_stderr,
        monotone,
        envelope,
        max_difference,
    })
}

/// `int_0^inf J_0(g u) e^{i a u} du = j(a/g)/g`.
pub fn bessel_exp_transform(a: f64, g: f64) -> Result<Complex64> {
    Ok(j_closed(a / g)? / g)
}

/// Refuses drives where some forcing mode sits on a band edge, `omega |m| = 2g`.
fn check_branch(p: &ModelParams, f: &ForcingSpec) -> Result<()> {
    for (m, _) in f.modes() {
        if m != 0 && ((m.abs() as f64) * p.omega - 2.0 * p.g).abs() <= 1e-12 * p.g {
            return Err(Error::ResonantBranch { m });
        }
    }
    Ok(())
}

/// `q0_k(T) = (psi_inf,k - delta_k0) N_k(T) / den_k` with `a = g xi - omega k`,
/// `den_k = int_0^inf J_0(g u) e^{i a u} du` and `N_k(T) = int_T^inf` of the same;
/// `psi_inf_k` is the coefficient of `e^{i k omega t}`.
pub fn remainder_q0(k: i64, xi: f64, times: &[f64], psi_inf_k: Complex64, p: &ModelParams, f: &ForcingSpec) -> Result<Vec<Complex64>> {
    check_branch(p, f)?;
    let a = p.g * xi - p.omega * k as f64;
    let den = bessel_exp_transform(a, p.g)?;
    let fluct = psi_inf_k - if k == 0 { 1.0 } else { 0.0 };
    let be = BesselExp::new(p.g, a);
    Ok(be.tails(times).into_iter().map(|tail| fluct * tail / den).collect())
}

/// `q0_k` on the uniform grid `T_n = n dt`, `n = 0..=steps`, via running integrals.
fn q0_uniform(k: i64, xi: f64, dt: f64, steps: usize, fluct: Complex64, p: &ModelParams) -> Result<Vec<Complex64>> {
    let a = p.g * xi - p.omega * k as f64;
    let den = bessel_exp_transform(a, p.g)?;
    let be = BesselExp::new(p.g, a);
    let times: Vec<f64> = (0..=steps).map(|n| n as f64 * dt).collect();
    let cum = be.cumulative(&times);
    Ok(cum.into_iter().map(|c| fluct * (den - c) / den).collect())
}

/// `q1_k(T) = int_0^T J_0(g u) e^{i a u} (V * q0)_k(T - u) du` on `T_n = n dt`,
/// by the trapezoid rule; `psi_inf` lists the coefficients of `e^{i m omega t}`
/// for `|m| <= mu_cap`.
pub fn remainder_q1(k: i64, xi: f64, dt: f64, steps: usize, psi_inf: &[Complex64], p: &ModelParams, f: &ForcingSpec) -> Result<Vec<Complex64>> {
    check_branch(p, f)?;
    let cap = (psi_inf.len() as i64 - 1) / 2;
    // (V * q0)_k = sum_m V_{k-m} q0_m
    let mut src = vec![Complex64::new(0.0, 0.0); steps + 1];
    for (j, v) in f.modes() {
        let m = k - j;
        if m.abs() > cap {
            continue;
        }
        let fluct = psi_inf[(m + cap) as usize] - if m == 0 { 1.0 } else { 0.0 };
        if fluct == Complex64::new(0.0, 0.0) {
            continue;
        }
        let q = q0_uniform(m, xi, dt, steps, fluct, p)?;
        for (s, qi) in src.iter_mut().zip(q) {
            *s += v * qi;
        }
    }
    let a = p.g * xi - p.omega * k as f64;
    let kern: Vec<Complex64> = (0..=steps)
        .map(|n| {
            let u = n as f64 * dt;
            bessel_j(0, p.g * u) * Complex64::cis(a * u)
        })
        .collect();
    let full = linear_convolution(&kern, &src);
    Ok((0..=steps)
        .map(|n| {
            if n == 0 {
                return Complex64::new(0.0, 0.0);
            }
            // trapezoid: halve the two end contributions
            let ends = 0.5 * (kern[0] * src[n] + kern[n] * src[0]);
            (full[n] - ends) * dt
        })
        .collect())
}

/// Full linear convolution by FFT.
pub fn linear_convolution(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let len = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut x = a.to_vec();
    x.resize(len, Complex64::new(0.0, 0.0));
    let mut y = b.to_vec();
    y.resize(len, Complex64::new(0.0, 0.0));
    fwd.process(&mut x);
    fwd.process(&mut y);
    for (p, q) in x.iter_mut().zip(&y) {
        *p *= q / len as f64;
    }
    inv.process(&mut x);
    x.truncate(a.len() + b.len() - 1);
    x
}

/// Applies the discrete operator `1 + i h W_{t0}` (product trapezoid) to samples
/// `f[n]` at `t0 + n dt`, at point `xi`.
pub fn apply_duhamel(fvals: &[Complex64], xi: f64, t0: f64, dt: f64, p: &ModelParams, forcing: &ForcingSpec) -> Vec<Complex64> {
    let n = fvals.len();
    let weighted: Vec<Complex64> = (0..n)
        .map(|m| forcing.eval(p.omega * (t0 + m as f64 * dt)) * fvals[m])
        .collect();
    let kern: Vec<Complex64> = (0..n)
        .map(|m| {
            let u = m as f64 * dt;
            bessel_j(0, p.g * u) * Complex64::cis(p.g * xi * u)
        })
        .collect();
    let full = linear_convolution(&kern, &weighted);
    (0..n)
        .map(|i| {
            let integral = if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                (full[i] - 0.5 * (kern[0] * weighted[i] + kern[i] * weighted[0])) * dt
            };
            fvals[i] + I * p.h * integral
        })
        .collect()
}
