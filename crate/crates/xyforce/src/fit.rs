//! Least-squares power laws on log-log data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    /// `p` in `y = C x^p`
    pub exponent: f64,
    /// `C`
    pub amplitude: f64,
    /// Standard error of the exponent.
    pub exponent_stderr: f64,
    /// RMS of the residuals in `ln y`.
    pub rms: f64,
    pub points: usize,
}

/// Fits `y = C x^p` over positive samples; needs at least `min_decades` of spread in `x`.
pub fn power_law(xs: &[f64], ys: &[f64], min_decades: f64) -> Result<PowerLaw> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let decades = if pts.len() < 2 { 0.0 } else { (hi - lo) / std::f64::consts::LN_10 };
    if pts.len() < 3 || decades < min_decades * (1.0 - 1e-9) {
        return Err(Error::InsufficientDecades { decades, required: min_decades });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Ok(PowerLaw {
        exponent: slope,
        amplitude: icpt.exp(),
        exponent_stderr: (ss / (n - 2.0) / sxx).sqrt(),
        rms: (ss / n).sqrt(),
        points: pts.len(),
    })
}
