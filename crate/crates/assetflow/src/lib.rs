//! Multi-asset, multi-group asset-flow market model.
//!
//! Prices adjust to the ratio of sentiment-driven cash inflow to stock
//! outflow; trend and value sentiments follow first-order dynamics. The
//! crate provides the coupled ODE system, fundamental-equilibrium
//! calibration, a damped Newton solver for general price equilibria, the
//! analytic block Jacobian with eigenvalue classification, Routh-Hurwitz
//! and diagonal-dominance stability checks, adaptive time integration, and
//! Hopf-bifurcation scans over model parameters.

pub mod analysis;
pub mod bifurcation;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod output;
pub mod scenario;
pub mod simulate;
pub mod stability;

pub use error::{Error, Result};
pub use model::{AssetSpec, FlowMode, GroupSpec, ModelSpec, RateForm, RateSpec, State};
