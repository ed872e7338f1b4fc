//! Run configuration read from JSON.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xyforce::params::Constants;
use xyforce::{derive_params, ForcingSpec, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub series: SeriesConfig,
    #[serde(default)]
    pub volterra: VolterraConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub g: f64,
    pub h: f64,
    pub omega: f64,
    /// Overrides the working gap `eps_bar / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Overrides the window radius `eps / (8 alpha)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingConfig {
    /// `amplitude * cos(mode * phi) + offset`
    Cosine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_i")]
        mode: i64,
        #[serde(default)]
        offset: f64,
    },
    /// Rows `[k, re, im]`; modes beyond `k_support` are dropped.
    FourierTable {
        coefficients: Vec<(i64, f64, f64)>,
        #[serde(default)]
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c0_bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_support: Option<i64>,
    },
}

fn one() -> f64 {
    1.0
}

fn one_i() -> i64 {
    1
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self::Cosine { amplitude: 1.0, mode: 1, offset: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Number of midpoint nodes in `q`.
    pub n_q: usize,
    /// Density factor of the extra samples inside windows.
    pub window_refine: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_q: 256, window_refine: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_cap: Option<i64>,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { n_max: 12, mu_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolterraConfig {
    pub t0_list: Vec<f64>,
    /// End of the simulated interval.
    pub t1: f64,
    pub dt: f64,
    /// Points of the `cos` grid used for the supremum over `xi`.
    pub n_xi: usize,
    /// Leave out points closer than the window radius to a singular point or band edge.
    pub exclude_windows: bool,
    /// Time samples written per `xi` by the `volterra` command.
    pub samples: usize,
}

impl Default for VolterraConfig {
    fn default() -> Self {
        Self { t0_list: vec![0.0], t1: 1e4, dt: 0.05, n_xi: 256, exclude_windows: true, samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Start of the fit window in `t - t0`.
    pub t_min: f64,
    /// Length of the fit window in decades.
    pub window_decades: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { t_min: 100.0, window_decades: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    /// Midpoint nodes in `q` for the transform.
    pub n_q: usize,
    pub x_max: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { n_q: 4096, x_max: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: "csv".into() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| anyhow::anyhow!("parse error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let m = &self.model;
        for (name, v) in [("model.g", m.g), ("model.omega", m.omega)] {
            positive(name, v)?;
        }
        if !(m.h.is_finite() && m.h >= 0.0) {
            bail!("model.h must be finite and >= 0, got {}", m.h);
        }
        if self.grid.n_q < 2 {
            bail!("grid.n_q must be >= 2");
        }
        if self.grid.window_refine == 0 {
            bail!("grid.window_refine must be >= 1");
        }
        if self.series.n_max == 0 {
            bail!("series.n_max must be >= 1");
        }
        if matches!(self.series.mu_cap, Some(c) if c < 0) {
            bail!("series.mu_cap must be >= 0");
        }
        let v = &self.volterra;
        if v.t0_list.is_empty() || v.t0_list.iter().any(|t| !t.is_finite()) {
            bail!("volterra.t0_list must hold finite start times");
        }
        positive("volterra.dt", v.dt)?;
        if v.t0_list.iter().any(|&t0| !(v.t1 > t0)) {
            bail!("volterra.t1 must exceed every start time");
        }
        if v.n_xi == 0 || v.samples == 0 {
            bail!("volterra.n_xi and volterra.samples must be >= 1");
        }
        positive("fit.t_min", self.fit.t_min)?;
        positive("fit.window_decades", self.fit.window_decades)?;
        let c = &self.constants;
        positive("constants.c", c.c)?;
        positive("constants.c1", c.c1)?;
        if !(c.margin_floor >= 0.0 && c.margin_floor.is_finite()) {
            bail!("constants.margin_floor must be finite and >= 0");
        }
        if self.lattice.n_q < 2 {
            bail!("lattice.n_q must be >= 2");
        }
        if self.output.format != "csv" {
            bail!("output.format: only \"csv\" is supported, got {:?}", self.output.format);
        }
        Ok(())
    }

    /// Validated parameters, with the configured overrides applied.
    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let mut p = derive_params(m.g, m.h, m.omega)?;
        if let Some(eps) = m.eps {
            p = p.with_eps(eps)?;
        }
        if let Some(r) = m.r {
            p = p.with_radius(r)?;
        }
        Ok(p)
    }

    pub fn forcing(&self) -> Result<ForcingSpec> {
        Ok(match &self.forcing {
            ForcingConfig::Cosine { amplitude, mode, offset } => {
                if *mode <= 0 {
                    bail!("forcing.mode must be >= 1, got {mode}");
                }
                let mut rows = vec![(*mode, amplitude / 2.0, 0.0), (-mode, amplitude / 2.0, 0.0)];
                if *offset != 0.0 {
                    rows.push((0, *offset, 0.0));
                }
                let c0 = offset.abs().max(amplitude.abs() / 2.0).max(f64::MIN_POSITIVE);
                ForcingSpec::from_table(&rows, 0.0, c0)?
            }
            ForcingConfig::FourierTable { coefficients, sigma, c0_bound, k_support } => {
                let rows: Vec<(i64, f64, f64)> = coefficients
                    .iter()
                    .copied()
                    .filter(|(k, _, _)| k_support.is_none_or(|s| k.abs() <= s))
                    .collect();
                let c0 = c0_bound.unwrap_or_else(|| {
                    rows.iter()
                        .map(|&(k, re, im)| re.hypot(im) * (sigma * k.abs() as f64).exp())
                        .fold(f64::MIN_POSITIVE, f64::max)
                });
                ForcingSpec::from_table(&rows, *sigma, c0)?
            }
        })
    }

    /// SHA-256 of the canonical JSON of the parsed configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn relaxation_window(&self) -> (f64, f64) {
        (self.fit.t_min, self.fit.t_min * 10f64.powf(self.fit.window_decades))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        bail!("{name} must be finite and > 0, got {v}")
    }
}
