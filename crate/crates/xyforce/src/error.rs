//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resonant driving: 2g/omega = {ratio} coincides with the integer {k}")]
    Resonance { ratio: f64, k: i64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("threshold undefined: the forcing vanishes identically")]
    UndefinedThreshold,

    #[error("no isolated eigenvalue when h = 0")]
    NoIsolatedEigenvalue,

    #[error("propagator evaluated at a singular point (tau = {tau})")]
    SingularPoint { tau: f64 },

    #[error("xi = {xi} lies inside the window of momentum {mu}")]
    InsideWindow { xi: f64, mu: i64 },

    #[error("stability margin {margin:.3e} below floor {floor} (mu = {mu}, xi = {xi}, gamma = {gamma:.3e})")]
    Stability { mu: i64, xi: f64, gamma: f64, margin: f64, floor: f64 },

    #[error("time step {dt} exceeds the limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },

    #[error("resonant branch: omega*m = 2g for forcing mode m = {m}")]
    ResonantBranch { m: i64 },

    #[error("fit window spans {decades:.2} decades, at least {required} required")]
    InsufficientDecades { decades: f64, required: f64 },

    #[error("lattice truncated at |x| = {x_max}: relative tail mass {tail:.3e} exceeds {tol:.1e}")]
    LatticeTail { x_max: usize, tail: f64, tol: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
