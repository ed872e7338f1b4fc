mod common;

use std::f64::consts::PI;

use common::I;
use num_complex::Complex64;
use xyforce::grid::xi_grid;
use xyforce::propagators::{bessel_j, XiPoint};
use xyforce::reed_series::{assemble_solution, evaluate_periodic, SeriesContext};
use xyforce::volterra::{
    apply_duhamel, max_step, periodic_limit, periodic_value, relaxation_fit, remainder_q0, remainder_q1,
    richardson_check, solve_finite_t0, time_coefficients, RelaxationConfig,
};
use xyforce::{derive_params, Error, ForcingSpec, ModelParams};

fn bench(h: f64) -> ModelParams {
    derive_params(1.0, h, 0.87).unwrap()
}

#[test]
fn step_limit() {
    let p = derive_params(2.0, 0.1, 0.45).unwrap();
    assert_eq!(max_step(&p), 0.025);
    let f = ForcingSpec::cosine();
    assert!(matches!(solve_finite_t0(0.2, 0.0, 1.0, 0.03, &p, &f), Err(Error::StepTooLarge { .. })));
    assert!(solve_finite_t0(0.2, 1.0, 1.0, 0.01, &p, &f).is_err());
}

#[test]
fn no_coupling_or_no_drive_gives_unity() {
    let f = ForcingSpec::cosine();
    let sol = solve_finite_t0(0.3, 2.0, 50.0, 0.01, &bench(0.0), &f).unwrap();
    assert!(sol.values.iter().all(|&z| z == Complex64::new(1.0, 0.0)));
    let none = ForcingSpec::from_table(&[], 0.0, 1.0).unwrap();
    let sol = solve_finite_t0(0.3, 2.0, 50.0, 0.01, &bench(0.2), &none).unwrap();
    assert!(sol.values.iter().all(|&z| z == Complex64::new(1.0, 0.0)));
}

#[test]
fn initial_value_and_short_time() {
    let p = bench(0.1);
    let f = ForcingSpec::cosine();
    for t0 in [0.0, 1.3, 7.9] {
        let delta = 1e-3;
        let sol = solve_finite_t0(0.4, t0, t0 + delta, 1e-4, &p, &f).unwrap();
        assert_eq!(sol.values[0], Complex64::new(1.0, 0.0));
        let expected = 1.0 - I * p.h * (p.omega * t0).cos() * delta;
        assert!((sol.values.last().unwrap() - expected).norm() <= 1e-6);
    }
}

/// Plain trapezoid Picard iterates `psi_0 = 1`, `psi_n = -i int K V psi_{n-1}`
/// with the summation written out, O(n^2).
fn picard_orders(xi: f64, t0: f64, dt: f64, steps: usize, p: &ModelParams, orders: usize) -> Vec<Vec<Complex64>> {
    let v: Vec<f64> = (0..=steps).map(|n| (p.omega * (t0 + n as f64 * dt)).cos()).collect();
    let kern: Vec<Complex64> =
        (0..=steps).map(|m| bessel_j(0, p.g * m as f64 * dt) * Complex64::cis(p.g * xi * m as f64 * dt)).collect();
    let mut out = vec![vec![Complex64::new(1.0, 0.0); steps + 1]];
    for _ in 0..orders {
        let prev = out.last().unwrap();
        let next: Vec<Complex64> = (0..=steps)
            .map(|n| {
                let mut s = Complex64::new(0.0, 0.0);
                for m in 0..=n {
                    let w = if m == 0 || m == n { 0.5 } else { 1.0 };
                    s += w * kern[n - m] * v[m] * prev[m];
                }
                if n == 0 {
                    s = Complex64::new(0.0, 0.0);
                }
                -I * s * dt
            })
            .collect();
        out.push(next);
    }
    out
}

#[test]
fn matches_truncated_coupling_expansion() {
    let (xi, t0, dt, steps) = (0.35, 0.4, 0.002, 500);
    let f = ForcingSpec::cosine();
    let mut scaled = Vec::new();
    for h in [0.05, 0.1, 0.2] {
        let p = bench(h);
        let sol = solve_finite_t0(xi, t0, t0 + steps as f64 * dt, dt, &p, &f).unwrap();
        let orders = picard_orders(xi, t0, dt, steps, &p, 3);
        let err = (0..=steps)
            .map(|n| {
                let partial: Complex64 = (0..=3).map(|k| h.powi(k as i32) * orders[k][n]).sum();
                (sol.values[n] - partial).norm()
            })
            .fold(0.0, f64::max);
        scaled.push(err / h.powi(4));
    }
    // fourth order remainder: err / h^4 is essentially constant
    for s in &scaled {
        assert!(*s < 1.0 && (s / scaled[0] - 1.0).abs() < 0.2, "{scaled:?}");
    }
}

#[test]
fn step_halving_is_second_order() {
    let f = ForcingSpec::cosine();
    for (xi, h) in [(0.3, 0.1), (-0.9, 0.3), (0.999, 0.05)] {
        let (order, err) = richardson_check(xi, 0.0, 20.0, 0.02, &bench(h), &f).unwrap();
        assert!(order >= 1.8, "xi={xi} order={order}");
        assert!(err < 1e-5);
    }
}

#[test]
fn periodic_synthesis() {
    let p = bench(0.0087);
    let pts = xi_grid(&p, 16, 1);
    let c = SeriesContext::new(p, ForcingSpec::cosine(), 0.0, 0.0);
    let flat = assemble_solution(&pts, &c, 4, None).unwrap();
    for t in [0.0, 1.7, 123.4] {
        assert_eq!(evaluate_periodic(&flat, 5, t, p.omega), Complex64::new(1.0, 0.0));
    }
    let sol = periodic_limit(&pts, &p, &ForcingSpec::cosine(), 8, 0.0).unwrap();
    let period = 2.0 * PI / p.omega;
    for i in 0..pts.len() {
        for t in [0.0, 0.4, 3.3, 50.0] {
            let a = periodic_value(&sol, i, t, p.omega);
            let b = periodic_value(&sol, i, t + period, p.omega);
            assert!((a - b).norm() <= 1e-12);
            let direct: Complex64 = time_coefficients(&sol, i)
                .iter()
                .enumerate()
                .map(|(j, c)| c * Complex64::cis((j as f64 - sol.mu_cap as f64) * p.omega * t))
                .sum();
            assert!((a - direct).norm() <= 1e-13);
        }
    }
}

#[test]
fn difference_satisfies_the_remainder_equation() {
    let p = bench(0.0087);
    let f = ForcingSpec::cosine();
    let xi = 0.35;
    let (t0, dt, steps) = (0.6, 0.01, 20_000);
    let sol = solve_finite_t0(xi, t0, t0 + steps as f64 * dt, dt, &p, &f).unwrap();
    let limit = periodic_limit(&[XiPoint::new(xi, &p)], &p, &f, 10, 0.0).unwrap();
    let coeffs = time_coefficients(&limit, 0);
    let cap = limit.mu_cap;
    let delta: Vec<Complex64> =
        (0..=steps).map(|n| sol.values[n] - periodic_value(&limit, 0, sol.time(n), p.omega)).collect();
    let lhs = apply_duhamel(&delta, xi, t0, dt, &p, &f);
    let sample: Vec<usize> = (0..=steps).step_by(97).collect();
    let times: Vec<f64> = sample.iter().map(|&n| n as f64 * dt).collect();
    let mut q0 = vec![Complex64::new(0.0, 0.0); sample.len()];
    for k in -cap..=cap {
        let ck = coeffs[(k + cap) as usize];
        let qk = remainder_q0(k, xi, &times, ck, &p, &f).unwrap();
        for (j, &n) in sample.iter().enumerate() {
            q0[j] += qk[j] * Complex64::cis(k as f64 * p.omega * sol.time(n));
        }
    }
    let worst = sample.iter().zip(&q0).map(|(&n, q)| (lhs[n] + q).norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn first_remainder_limits() {
    let p = bench(0.0087);
    let f = ForcingSpec::cosine();
    let psi = Complex64::new(0.3, -0.2);
    for k in [-2, 0, 1] {
        let q = remainder_q0(k, 0.35, &[0.0, 1e-9], psi, &p, &f).unwrap();
        let fluct = psi - if k == 0 { 1.0 } else { 0.0 };
        assert!((q[0] - fluct).norm() <= 1e-10 * fluct.norm().max(1.0));
        assert!((q[1] - fluct).norm() <= 1e-8);
    }
    let q = remainder_q0(0, 0.35, &[0.0, 5.0, 50.0], Complex64::new(1.0, 0.0), &p, &f).unwrap();
    assert!(q.iter().all(|z| z.norm() == 0.0));
    let q = remainder_q0(3, 0.35, &[0.0, 5.0, 50.0], Complex64::new(0.0, 0.0), &p, &f).unwrap();
    assert!(q.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn second_remainder_edge_cases() {
    let p = bench(0.0087);
    let none = ForcingSpec::from_table(&[], 0.0, 1.0).unwrap();
    let q = remainder_q1(0, 0.35, 0.01, 1000, &[Complex64::new(1.0, 0.0)], &p, &none).unwrap();
    assert!(q.iter().all(|z| z.norm() == 0.0));
    // omega = 2g puts the first harmonic on the band edge
    let bad = ModelParams::unchecked(1.0, 0.01, 2.0).unwrap();
    let f = ForcingSpec::cosine();
    let psi = [Complex64::new(0.0, 0.1), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.1)];
    assert!(matches!(remainder_q1(0, 0.35, 0.01, 100, &psi, &bad, &f), Err(Error::ResonantBranch { m: -1 | 1 })));
    assert!(matches!(remainder_q0(0, 0.35, &[1.0], psi[1], &bad, &f), Err(Error::ResonantBranch { .. })));
}

#[test]
fn relaxation_without_coupling_is_trivial() {
    let p = bench(0.0);
    let cfg = RelaxationConfig {
        t0_list: vec![0.0, 1.0],
        horizon: 300.0,
        dt: 0.05,
        window: (10.0, 300.0),
        n_max: 4,
        margin_floor: 0.0,
    };
    let fit = relaxation_fit(&xi_grid(&p, 8, 1), &cfg, &p, &ForcingSpec::cosine()).unwrap();
    assert_eq!(fit.max_difference, 0.0);
    assert_eq!(fit.exponent, 0.0);
    let short = RelaxationConfig { window: (10.0, 50.0), ..cfg };
    assert!(matches!(
        relaxation_fit(&xi_grid(&p, 8, 1), &short, &p, &ForcingSpec::cosine()),
        Err(Error::InsufficientDecades { .. })
    ));
}

#[test]
fn relaxation_exponent_does_not_depend_on_coupling() {
    let base = bench(0.0);
    let f = ForcingSpec::cosine();
    let (_, g0) = xyforce::params::gamma_threshold(&base, &f, 1.0).unwrap();
    let pts = xyforce::grid::relaxation_grid(&base, 64, true);
    let cfg = RelaxationConfig {
        t0_list: vec![0.0],
        horizon: 2000.0,
        dt: 0.05,
        window: (100.0, 2000.0),
        n_max: 10,
        margin_floor: 0.0,
    };
    let mut exps = Vec::new();
    for frac in [0.5, 0.125] {
        let p = bench(frac * g0 * base.omega);
        exps.push(relaxation_fit(&pts, &cfg, &p, &f).unwrap().exponent);
    }
    assert!((exps[0] - exps[1]).abs() < 0.1, "{exps:?}");
    assert!(exps.iter().all(|e| (-0.65..=-0.35).contains(e)), "{exps:?}");
}
