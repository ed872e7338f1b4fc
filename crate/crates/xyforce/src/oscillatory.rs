//! Quadrature of `int J_0(g t) e^{i a t} dt` over finite and semi-infinite ranges.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::propagators::bessel_j;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "need at least two nodes");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre integration of `J_0(g t) e^{i a t}`.
#[derive(Debug, Clone)]
pub struct BesselExp {
    pub g: f64,
    pub a: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panel: f64,
}

const GL_ORDER: usize = 12;

impl BesselExp {
    pub fn new(g: f64, a: f64) -> Self {
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        // about two oscillations of the fastest component per panel
        let panel = (2.0 * PI / (g + a.abs())).min(2.0);
        Self { g, a, nodes, weights, panel }
    }

    fn integrand(&self, t: f64) -> Complex64 {
        bessel_j(0, self.g * t) * Complex64::cis(self.a * t)
    }

    /// `int_lo^hi`
    pub fn integral(&self, lo: f64, hi: f64) -> Complex64 {
        if hi == lo {
            return Complex64::new(0.0, 0.0);
        }
        if hi < lo {
            return -self.integral(hi, lo);
        }
        let m = ((hi - lo) / self.panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / m as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let c = lo + (j as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += self.integrand(c + 0.5 * h * x) * *w;
            }
        }
        s * (0.5 * h)
    }

    /// Running integrals `int_0^{t_i}` for increasing `times`.
    pub fn cumulative(&self, times: &[f64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(times.len());
        let mut acc = Complex64::new(0.0, 0.0);
        let mut prev = 0.0;
        for &t in times {
            acc += self.integral(prev, t);
            prev = t;
            out.push(acc);
        }
        out
    }

    /// `int_t^inf` from the large-argument expansion of `J_0`; accurate once
    /// `g t |a/g +- 1|` is large.
    pub fn asymptotic_tail(&self, t: f64) -> Complex64 {
        let u = self.g * t;
        let beta = self.a / self.g;
        // Hankel coefficients a_k(0)
        let mut ak = vec![1.0f64];
        for k in 1..8 {
            let prev = ak[k - 1];
            ak.push(prev * (-((2 * k - 1) as f64).powi(2)) / (8.0 * k as f64));
        }
        let i = Complex64::new(0.0, 1.0);
        let mut s = Complex64::new(0.0, 0.0);
        for (k, &a) in ak.iter().enumerate() {
            let nu = k as f64 + 0.5;
            let ik = i.powi(k as i32);
            s += a * ik * Complex64::cis(-PI / 4.0) * power_tail(nu, beta + 1.0, u);
            s += a * ik.conj() * Complex64::cis(PI / 4.0) * power_tail(nu, beta - 1.0, u);
        }
        s * (0.5 * (2.0 / PI).sqrt() / self.g)
    }

    /// `int_t^inf` by quadrature up to a cutoff beyond which the expansion is used.
    pub fn tail(&self, t: f64) -> Complex64 {
        let beta = self.a / self.g;
        let gap = (beta - 1.0).abs().min((beta + 1.0).abs()).max(1e-12);
        let cutoff = t.max(1e4 / self.g).max(400.0 / (self.g * gap));
        self.integral(t, cutoff) + self.asymptotic_tail(cutoff)
    }

    /// [`tail`](Self::tail) at many times: one cutoff evaluation, then running
    /// integrals between consecutive times.
    pub fn tails(&self, times: &[f64]) -> Vec<Complex64> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&i, &j| times[j].total_cmp(&times[i]));
        let mut out = vec![Complex64::new(0.0, 0.0); times.len()];
        let Some(&last) = order.first() else {
            return out;
        };
        let mut acc = self.tail(times[last]);
        let mut prev = times[last];
        for i in order {
            acc += self.integral(times[i], prev);
            prev = times[i];
            out[i] = acc;
        }
        out
    }
}

/// `int_u^inf s^{-nu} e^{i b s} ds` by repeated integration by parts.
fn power_tail(nu: f64, b: f64, u: f64) -> Complex64 {
    let ibu = Complex64::new(0.0, b * u);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut m = 0.0;
    loop {
        let next = term * (nu + m) / ibu;
        if next.norm() >= term.norm() || next.norm() < 1e-18 * sum.norm() {
            break;
        }
        term = next;
        sum += term;
        m += 1.0;
        if m > 60.0 {
            break;
        }
    }
    -Complex64::cis(b * u) * u.powf(-nu) / Complex64::new(0.0, b) * sum
}
