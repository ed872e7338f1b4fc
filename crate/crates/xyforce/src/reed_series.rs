//! Reeds (linear trees), their renormalised values and the resummed series for
//! the Fourier coefficients of the periodic solution.
//!
//! A reed of order `N` is a chain of nodes carrying modes `k_1..k_N`; line `p`
//! leaves node `p` with momentum `k_1 + .. + k_p`, and the last line is the root.
//! Lines of singular momentum carry a label, `L` (localised) or `R` (remainder).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::forcing::ForcingSpec;
use crate::params::ModelParams;
use crate::propagators::{inv_j_window, j_at, rj_at, WindowGeometry, XiPoint};
use crate::resummation::resummed_l_at;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    L,
    R,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reed {
    pub modes: Vec<i64>,
    /// Momentum of the line leaving each node.
    pub momenta: Vec<i64>,
    /// Label of each line; `None` on regular lines.
    pub labels: Vec<Option<Label>>,
}

impl Reed {
    /// Builds a reed; `labels` lists the labels of the singular lines in order.
    pub fn new(modes: Vec<i64>, labels: &[Label], alpha: f64) -> Result<Self> {
        let ks = (2.0 * alpha).floor() as i64;
        let momenta: Vec<i64> = modes
            .iter()
            .scan(0i64, |acc, k| {
                *acc += k;
                Some(*acc)
            })
            .collect();
        let mut it = labels.iter();
        let mut out = Vec::with_capacity(modes.len());
        for &m in &momenta {
            if m.abs() <= ks {
                let l = it.next().ok_or_else(|| invalid("labels", "fewer labels than singular lines"))?;
                out.push(Some(*l));
            } else {
                out.push(None);
            }
        }
        if it.next().is_some() {
            return Err(invalid("labels", "more labels than singular lines"));
        }
        Ok(Self { modes, momenta, labels: out })
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    pub fn root_momentum(&self) -> i64 {
        self.momenta.last().copied().unwrap_or(0)
    }

    /// Number of `L` lines.
    pub fn localized_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Some(Label::L)).count()
    }
}

/// No resonance of degree one or two: no single node of mode 0 and no pair of
/// nodes with modes `(k, -k)` sitting between two `L` lines.
pub fn is_renormalized(reed: &Reed) -> bool {
    let n = reed.order();
    let is_l = |i: usize| reed.labels[i] == Some(Label::L);
    for i in 0..n {
        if !is_l(i) {
            continue;
        }
        if i + 1 < n && is_l(i + 1) && reed.modes[i + 1] == 0 {
            return false;
        }
        if i + 2 < n && is_l(i + 2) && reed.modes[i + 1] != 0 && reed.modes[i + 1] + reed.modes[i + 2] == 0 {
            return false;
        }
    }
    true
}

/// Renormalised reeds of order `n` and root momentum `mu`, in lexicographic
/// order of modes and then labels (`L < R`).
pub fn enumerate_reeds(n: usize, mu: i64, f: &ForcingSpec, p: &ModelParams) -> ReedIter {
    ReedIter::new(n, mu, f, p)
}

pub struct ReedIter {
    support: Vec<i64>,
    n: usize,
    mu: i64,
    alpha: f64,
    ks: i64,
    odometer: Vec<usize>,
    exhausted: bool,
    modes: Vec<i64>,
    singular: usize,
    mask: u64,
}

impl ReedIter {
    fn new(n: usize, mu: i64, f: &ForcingSpec, p: &ModelParams) -> Self {
        let support: Vec<i64> = f.modes().map(|(k, _)| k).collect();
        let exhausted = n == 0 || support.is_empty() || n > 63;
        let mut it = Self {
            support,
            n,
            mu,
            alpha: p.alpha,
            ks: p.k_singular(),
            odometer: vec![0; n],
            exhausted,
            modes: Vec::new(),
            singular: 0,
            mask: 0,
        };
        if !it.exhausted {
            it.odometer[n - 1] = usize::MAX; // so the first advance lands on all zeros
            it.advance_modes();
        }
        it
    }

    /// Moves to the next mode tuple with the right total; sets `exhausted` at the end.
    fn advance_modes(&mut self) {
        let b = self.support.len();
        loop {
            let mut i = self.n;
            loop {
                if i == 0 {
                    self.exhausted = true;
                    return;
                }
                i -= 1;
                let next = self.odometer[i].wrapping_add(1);
                if next < b {
                    self.odometer[i] = next;
                    break;
                }
                self.odometer[i] = 0;
            }
            let modes: Vec<i64> = self.odometer.iter().map(|&j| self.support[j]).collect();
            if modes.iter().sum::<i64>() == self.mu {
                let mut acc = 0;
                self.singular = modes
                    .iter()
                    .filter(|&&k| {
                        acc += k;
                        acc.abs() <= self.ks
                    })
                    .count();
                self.modes = modes;
                self.mask = 0;
                return;
            }
        }
    }
}

impl Iterator for ReedIter {
    type Item = Reed;

    fn next(&mut self) -> Option<Reed> {
        while !self.exhausted {
            if self.mask >= 1u64 << self.singular {
                self.advance_modes();
                continue;
            }
            let s = self.singular;
            let labels: Vec<Label> = (0..s)
                .map(|i| if self.mask >> (s - 1 - i) & 1 == 0 { Label::L } else { Label::R })
                .collect();
            self.mask += 1;
            let reed = Reed::new(self.modes.clone(), &labels, self.alpha).expect("label count matches");
            if is_renormalized(&reed) {
                return Some(reed);
            }
        }
        None
    }
}

/// Inputs shared by every evaluation of the series.
#[derive(Debug, Clone)]
pub struct SeriesContext {
    pub params: ModelParams,
    pub forcing: ForcingSpec,
    pub gamma: f64,
    pub margin_floor: f64,
}

impl SeriesContext {
    pub fn new(params: ModelParams, forcing: ForcingSpec, gamma: f64, margin_floor: f64) -> Self {
        Self { params, forcing, gamma, margin_floor }
    }

    fn resummed(&self, mu: i64, pt: &XiPoint) -> Result<Complex64> {
        resummed_l_at(mu, pt, self.gamma, &self.params, &self.forcing, self.margin_floor)
    }
}

/// Renormalised value of a reed without the `(-i gamma)^N` factor.
pub fn reed_value(reed: &Reed, pt: &XiPoint, ctx: &SeriesContext) -> Result<Complex64> {
    let p = &ctx.params;
    let mut v = Complex64::new(1.0, 0.0);
    for ((&k, &m), label) in reed.modes.iter().zip(&reed.momenta).zip(&reed.labels) {
        v *= ctx.forcing.coefficient(k);
        v *= match label {
            Some(Label::L) => ctx.resummed(m, pt)?,
            Some(Label::R) => rj_at(m, pt, p)?,
            None => j_at(m, pt, p)?,
        };
        if v == Complex64::new(0.0, 0.0) {
            break;
        }
    }
    Ok(v)
}

/// Order-by-order contributions `(-i gamma)^N sum_reeds Val^R` at one point for
/// `N = 1..=n_max`, indexed `[N - 1][mu + mu_cap]`.
///
/// Sums over reeds by transfer along the chain: only the window momentum of the
/// point (if any) carries a nonzero `L` value, so a reed is renormalised exactly
/// when no two lines of that momentum labelled `L` are fewer than three
/// positions apart. The state is the current momentum and the distance back to
/// the last such line.
pub fn series_orders(pt: &XiPoint, ctx: &SeriesContext, n_max: usize, mu_cap: i64) -> Result<Vec<Vec<Complex64>>> {
    let p = &ctx.params;
    let modes: Vec<(i64, Complex64)> = ctx.forcing.modes().collect();
    let ks = ctx.forcing.k_support();
    let span = (n_max as i64 * ks).max(mu_cap);
    let width = (2 * span + 1) as usize;
    let idx = |m: i64| (m + span) as usize;
    let w = pt.window_mu();
    let zero = Complex64::new(0.0, 0.0);

    let mut props = vec![zero; width];
    for m in -span..=span {
        props[idx(m)] = if Some(m) == w { ctx.resummed(m, pt)? } else { j_at(m, pt, p)? };
    }

    let step = -I * ctx.gamma;
    // amp[lag][m]: lag 0 = current line is an L line of the window momentum,
    // 1 = the previous one was, 2 = neither.
    let mut amp = vec![vec![zero; width]; 3];
    amp[2][idx(0)] = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let mut next = vec![vec![zero; width]; 3];
        for lag in 0..3 {
            for m in -span..=span {
                let a = amp[lag][idx(m)];
                if a == zero {
                    continue;
                }
                for &(k, v) in &modes {
                    let m2 = m + k;
                    if m2.abs() > span {
                        continue;
                    }
                    let (new_lag, prop) = if Some(m2) == w {
                        if lag < 2 {
                            continue;
                        }
                        (0, props[idx(m2)])
                    } else {
                        ((lag + 1).min(2), props[idx(m2)])
                    };
                    next[new_lag][idx(m2)] += a * step * v * prop;
                }
            }
        }
        amp = next;
        out.push(
            (-mu_cap..=mu_cap)
                .map(|m| amp[0][idx(m)] + amp[1][idx(m)] + amp[2][idx(m)])
                .collect(),
        );
    }
    Ok(out)
}

/// `delta_{mu,0} + sum_{N=1}^{n_max} (-i gamma)^N sum_reeds Val^R`.
pub fn psi_coefficient(mu: i64, pt: &XiPoint, ctx: &SeriesContext, n_max: usize) -> Result<Complex64> {
    let cap = mu.abs();
    let orders = series_orders(pt, ctx, n_max, cap)?;
    let base = if mu == 0 { 1.0 } else { 0.0 };
    Ok(orders.iter().map(|o| o[(mu + cap) as usize]).sum::<Complex64>() + base)
}

/// The same coefficient by explicit enumeration of reeds; exponential in `n_max`.
pub fn psi_coefficient_enumerated(mu: i64, pt: &XiPoint, ctx: &SeriesContext, n_max: usize) -> Result<Complex64> {
    let mut total = Complex64::new(if mu == 0 { 1.0 } else { 0.0 }, 0.0);
    for n in 1..=n_max {
        let mut s = Complex64::new(0.0, 0.0);
        for reed in enumerate_reeds(n, mu, &ctx.forcing, &ctx.params) {
            s += reed_value(&reed, pt, ctx)?;
        }
        total += (-I * ctx.gamma).powi(n as i32) * s;
    }
    Ok(total)
}

/// Fourier coefficients of the resummed periodic solution on a set of points.
#[derive(Debug, Clone)]
pub struct PeriodicSolution {
    pub mu_cap: i64,
    pub points: Vec<XiPoint>,
    /// `psi_mu - delta_{mu,0}` at `points[i]`, stored at `[i][mu + mu_cap]`;
    /// kept apart from the unit term so small corrections keep their digits.
    pub fluctuations: Vec<Vec<Complex64>>,
    pub gamma: f64,
    pub n_max: usize,
    /// `sup |S_N - S_{N-1}|` over points and momenta, for `N = 1..=n_max`.
    pub order_sup: Vec<f64>,
}

impl PeriodicSolution {
    pub fn coefficient(&self, i: usize, mu: i64) -> Complex64 {
        let base = if mu == 0 { 1.0 } else { 0.0 };
        self.fluctuation(i, mu) + base
    }

    /// `psi_mu - delta_{mu,0}`
    pub fn fluctuation(&self, i: usize, mu: i64) -> Complex64 {
        if mu.abs() > self.mu_cap {
            Complex64::new(0.0, 0.0)
        } else {
            self.fluctuations[i][(mu + self.mu_cap) as usize]
        }
    }

    /// `sum_mu e^{i mu phi} psi_mu` at `points[i]`.
    pub fn synthesize(&self, i: usize, phi: f64) -> Complex64 {
        (-self.mu_cap..=self.mu_cap)
            .map(|mu| self.coefficient(i, mu) * Complex64::cis(mu as f64 * phi))
            .sum()
    }
}

/// `psi_infinity(xi_i, t) = sum_mu e^{i mu omega t} psi_mu(xi_i)`.
pub fn evaluate_periodic(sol: &PeriodicSolution, i: usize, t: f64, omega: f64) -> Complex64 {
    sol.synthesize(i, omega * t)
}

/// Sums the series to order `n_max` at every point. `mu_cap` defaults to the
/// exact support `n_max * k_support`.
pub fn assemble_solution(
    points: &[XiPoint],
    ctx: &SeriesContext,
    n_max: usize,
    mu_cap: Option<i64>,
) -> Result<PeriodicSolution> {
    let full = n_max as i64 * ctx.forcing.k_support();
    let mu_cap = mu_cap.unwrap_or(full);
    if mu_cap < 0 {
        return Err(invalid("mu_cap", "must be >= 0"));
    }
    let per_point: Vec<Vec<Vec<Complex64>>> =
        points.par_iter().map(|pt| series_orders(pt, ctx, n_max, mu_cap)).collect::<Result<_>>()?;
    let mut order_sup = vec![0.0f64; n_max];
    let mut fluctuations = Vec::with_capacity(points.len());
    for orders in &per_point {
        let mut c = vec![Complex64::new(0.0, 0.0); (2 * mu_cap + 1) as usize];
        for (n, o) in orders.iter().enumerate() {
            for (ci, oi) in c.iter_mut().zip(o) {
                *ci += oi;
                order_sup[n] = order_sup[n].max(oi.norm());
            }
        }
        fluctuations.push(c);
    }
    Ok(PeriodicSolution { mu_cap, points: points.to_vec(), fluctuations, gamma: ctx.gamma, n_max, order_sup })
}

/// Unrenormalised term of order `n`: `sum over modes summing to mu of prod V_k j_{mu_p}`.
pub fn naive_coefficient(n: usize, mu: i64, xi: f64, p: &ModelParams, f: &ForcingSpec) -> Result<Complex64> {
    if let Some(w) = WindowGeometry::new(p).window_of(xi) {
        return Err(Error::InsideWindow { xi, mu: w.mu });
    }
    let support: Vec<(i64, Complex64)> = f.modes().collect();
    if n == 0 {
        return Ok(Complex64::new(if mu == 0 { 1.0 } else { 0.0 }, 0.0));
    }
    if support.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let pt = XiPoint::new(xi, p);
    let mut idx = vec![0usize; n];
    let mut total = Complex64::new(0.0, 0.0);
    'outer: loop {
        let modes_sum: i64 = idx.iter().map(|&j| support[j].0).sum();
        if modes_sum == mu {
            let mut v = Complex64::new(1.0, 0.0);
            let mut m = 0;
            for &j in &idx {
                m += support[j].0;
                v *= support[j].1 * j_at(m, &pt, p)?;
            }
            total += v;
        }
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < support.len() {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    Ok(total)
}

/// `sup |psi_mu - delta_{mu,0} + i gamma j_mu sum_k V_{mu-k} psi_k|` over points
/// and `|mu| <= mu_cap`. Each row is divided by `max(1, |j_mu|)`: next to a
/// singular point `j_mu` reaches 1e20 and the raw row only measures roundoff.
pub fn residual(sol: &PeriodicSolution, ctx: &SeriesContext) -> Result<f64> {
    let p = &ctx.params;
    let cap = sol.mu_cap;
    let modes: Vec<(i64, Complex64)> = ctx.forcing.modes().collect();
    let per_point: Vec<f64> = (0..sol.points.len())
        .into_par_iter()
        .map(|i| {
            let pt = &sol.points[i];
            let mut worst = 0.0f64;
            for mu in -cap..=cap {
                // V_mu from the unit term, the rest from the fluctuations
                let conv: Complex64 = ctx.forcing.coefficient(mu)
                    + modes.iter().map(|&(k, v)| v * sol.fluctuation(i, mu - k)).sum::<Complex64>();
                let j = j_at(mu, pt, p)?;
                let r = sol.fluctuation(i, mu) + I * ctx.gamma * j * conv;
                worst = worst.max(r.norm() / j.norm().max(1.0));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().fold(0.0, f64::max))
}

/// Direct solution of the truncated Fourier system
/// `psi_mu + i gamma j_mu sum_k V_{mu-k} psi_k = delta_{mu,0}`, `|mu| <= mu_cap`,
/// with each row divided by `j_mu` so that singular points stay harmless.
pub fn fourier_solve(pt: &XiPoint, gamma: f64, p: &ModelParams, f: &ForcingSpec, mu_cap: i64) -> Result<Vec<Complex64>> {
    let n = (2 * mu_cap + 1) as usize;
    let mut a = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    let mut b = nalgebra::DVector::<Complex64>::zeros(n);
    for mu in -mu_cap..=mu_cap {
        let row = (mu + mu_cap) as usize;
        let inv = match pt.window {
            Some(w) if w.mu == mu => inv_j_window(pt, p).expect("window point"),
            _ => 1.0 / j_at(mu, pt, p)?,
        };
        a[(row, row)] += inv;
        for (k, v) in f.modes() {
            let col = mu - k;
            if col.abs() <= mu_cap {
                a[(row, (col + mu_cap) as usize)] += I * gamma * v;
            }
        }
        if mu == 0 {
            b[row] = inv;
        }
    }
    let x = a.lu().solve(&b).ok_or_else(|| invalid("gamma", "singular Fourier system"))?;
    Ok(x.iter().copied().collect())
}

/// Largest ratio `sup|order N| / sup|order N-1|` for `N = 2..=n_max`.
pub fn max_order_ratio(sol: &PeriodicSolution) -> f64 {
    sol.order_sup
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .fold(0.0, f64::max)
}

/// Coupling at which the largest successive-order ratio reaches one, found by
/// geometric bisection in `[lo, hi]`. A failed stability check counts as divergence.
pub fn convergence_radius(points: &[XiPoint], ctx: &SeriesContext, n_max: usize, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid("gamma", format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    let converges = |gamma: f64| -> Result<bool> {
        let c = SeriesContext { params: ctx.params.with_gamma(gamma), gamma, ..ctx.clone() };
        match assemble_solution(points, &c, n_max, None) {
            Ok(sol) => Ok(max_order_ratio(&sol) < 1.0),
            Err(Error::Stability { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if !converges(lo)? {
        return Ok(lo);
    }
    if converges(hi)? {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    while b / a > 1.0 + 1e-3 {
        let m = (a * b).sqrt();
        if converges(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a * b).sqrt())
}
