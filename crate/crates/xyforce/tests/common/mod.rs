//! Oracles shared by the integration tests. Nothing here calls into the crate's
//! own quadrature, series or enumeration code.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use xyforce::propagators::bessel_j;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

// 20-point Gauss-Legendre rule on [-1, 1], tabulated
const GL_X: [f64; 20] = [
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513258, -0.8391169718222188,
    -0.7463319064601508, -0.636053680726515, -0.5108670019508271, -0.37370608871541955,
    -0.2277858511416451, -0.07652652113349734, 0.07652652113349734, 0.2277858511416451,
    0.37370608871541955, 0.5108670019508271, 0.636053680726515, 0.7463319064601508,
    0.8391169718222188, 0.9122344282513258, 0.9639719272779138, 0.9931285991850949,
];
const GL_W: [f64; 20] = [
    0.017614007139153273, 0.04060142980038622, 0.06267204833410944, 0.08327674157670467,
    0.10193011981724026, 0.11819453196151825, 0.13168863844917653, 0.14209610931838187,
    0.14917298647260366, 0.15275338713072578, 0.15275338713072578, 0.14917298647260366,
    0.14209610931838187, 0.13168863844917653, 0.11819453196151825, 0.10193011981724026,
    0.08327674157670467, 0.06267204833410944, 0.04060142980038622, 0.017614007139153273,
];

/// Composite 20-point Gauss-Legendre over `panels` equal pieces of `[a, b]`.
pub fn gl<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in GL_X.iter().zip(GL_W) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += s * 0.5 * h;
    }
    total
}

pub fn gl_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    gl(|x| Complex64::new(f(x), 0.0), a, b, panels).re
}

/// `J_0(t) = (1/pi) int_0^pi cos(t cos x) dx`.
pub fn j0_quad(t: f64) -> f64 {
    gl_real(|x| (t * x.cos()).cos(), 0.0, PI, 8 + (t.abs() as usize) / 2) / PI
}

/// `int_T^inf H(t) e^{i tau t} dt / 2` for one Hankel function, from its
/// asymptotic expansion with the contour turned into the upper half plane.
/// `branch = +1` for `H^(1)`, `-1` for `H^(2)`.
fn hankel_tail(tau: f64, t_cut: f64, branch: f64) -> Complex64 {
    let lambda = tau + branch;
    let coeffs = [1.0, -1.0 / 8.0, 9.0 / 128.0, -225.0 / 3072.0, 11025.0 / 98304.0];
    let phase = Complex64::cis(-branch * PI / 4.0);
    let amp = |z: Complex64| -> Complex64 {
        let mut series = Complex64::new(0.0, 0.0);
        for (k, a) in coeffs.iter().enumerate() {
            series += (branch * I).powi(k as i32) * *a / z.powi(k as i32);
        }
        0.5 * (2.0 / (PI * z)).sqrt() * phase * series
    };
    let dir = I * lambda.signum();
    let scale = 1.0 / lambda.abs();
    // t = T + dir * w / |lambda|, e^{i lambda t} = e^{i lambda T} e^{-w}
    let body = gl(|w| amp(t_cut + dir * w * scale) * (-w).exp(), 0.0, 45.0, 45);
    Complex64::cis(lambda * t_cut) * dir * scale * body
}

/// `int_0^inf J_0(t) e^{i tau t} dt`: quadrature to `t_cut`, asymptotic tail beyond.
pub fn bessel_transform_oracle(tau: f64, t_cut: f64) -> Complex64 {
    let panels = (t_cut * (1.0 + tau.abs()) / 4.0).ceil() as usize;
    let body = gl(|t| bessel_j(0, t) * Complex64::cis(tau * t), 0.0, t_cut, panels);
    body + hankel_tail(tau, t_cut, 1.0) + hankel_tail(tau, t_cut, -1.0)
}

/// A labelled chain straight from the definition: modes, and one optional label
/// per line (`Some(true)` = localised).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteReed {
    pub modes: Vec<i64>,
    pub labels: Vec<Option<bool>>,
}

impl BruteReed {
    pub fn momentum(&self, line: usize) -> i64 {
        self.modes[..=line].iter().sum()
    }
}

/// Resonance of degree 1 or 2: a block of consecutive nodes `a..a+d` with zero
/// mode sum whose entering line `a-1` and exiting line `a+d-1` are both
/// localised; for two nodes the internal line must differ in momentum.
pub fn has_low_resonance(r: &BruteReed) -> bool {
    let n = r.modes.len();
    for d in 1..=2usize {
        for a in 1..n {
            let last = a + d - 1;
            if last >= n {
                continue;
            }
            let block_sum: i64 = r.modes[a..=last].iter().sum();
            let enter = r.labels[a - 1] == Some(true);
            let exit = r.labels[last] == Some(true);
            if block_sum != 0 || !enter || !exit {
                continue;
            }
            if d == 2 && r.momentum(a) == r.momentum(a - 1) {
                continue;
            }
            return true;
        }
    }
    false
}

/// Every mode tuple over `support` summing to `mu`, every labelling of the
/// singular lines, then the resonance filter.
pub fn brute_reeds(n: usize, mu: i64, support: &[i64], alpha: f64) -> Vec<BruteReed> {
    let ks = (2.0 * alpha).floor() as i64;
    let mut out = Vec::new();
    let total = support.len().pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut modes = vec![0i64; n];
        for slot in (0..n).rev() {
            modes[slot] = support[c % support.len()];
            c /= support.len();
        }
        if modes.iter().sum::<i64>() != mu {
            continue;
        }
        let singular: Vec<usize> = (0..n)
            .filter(|&l| modes[..=l].iter().sum::<i64>().abs() <= ks)
            .collect();
        for mask in 0..(1usize << singular.len()) {
            let mut labels = vec![None; n];
            for (bit, &line) in singular.iter().enumerate() {
                labels[line] = Some(mask >> bit & 1 == 1);
            }
            let r = BruteReed { modes: modes.clone(), labels };
            if !has_low_resonance(&r) {
                out.push(r);
            }
        }
    }
    out
}

/// Midpoint-spaced sample of `[a, b]`.
pub fn linspace_mid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (i as f64 + 0.5) * (b - a) / n as f64).collect()
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}
