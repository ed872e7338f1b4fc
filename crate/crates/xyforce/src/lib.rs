//! Forced XY-type dynamics on a one-dimensional lattice: free propagators,
//! resummed perturbation series for the periodic response, a Volterra solver
//! for finite start times, and the transform to lattice sites.

pub mod error;
pub mod fit;
pub mod forcing;
pub mod grid;
pub mod lattice;
pub mod oscillatory;
pub mod params;
pub mod propagators;
pub mod reed_series;
pub mod resummation;
pub mod volterra;

pub use error::{Error, Result};
pub use forcing::ForcingSpec;
pub use params::{derive_params, ModelParams};
