//! Robust linear-quadratic active-power tracking for wind turbines.
//!
//! The crate covers the whole design and validation loop:
//!
//! * [`coefficients`]: gridded piecewise-affine Cp/CT surfaces.
//! * [`turbine`]: plant parameters and the augmented nonlinear dynamics
//!   `ẋ = f_a(x, w) + B·u`.
//! * [`equilibrium`] / [`linearize`]: operating points and Jacobians.
//! * [`synthesis`]: multi-model H2 state feedback via an LMI program, solved
//!   by an in-repo interior-point method, plus Lyapunov-based certification.
//! * [`control`]: runtime controller (reference pipeline, gain blending, wind
//!   estimator) and a textbook baseline controller.
//! * [`sim`]: saturated fixed-step closed-loop simulation.
//! * [`metrics`]: rainflow counting, damage-equivalent loads, tracking error.
//! * [`scenario`] / [`design`]: scenario schema and the region-2/3 design
//!   pipeline shared by the CLI and the browser demo.

pub mod coefficients;
pub mod control;
pub mod design;
pub mod equilibrium;
mod error;
pub mod linearize;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod synthesis;
pub mod turbine;

pub use error::{Error, Result};

/// Number of augmented states.
pub const NX: usize = 7;
/// Number of control inputs.
pub const NU: usize = 2;

pub type StateVector = nalgebra::SVector<f64, NX>;
pub type StateMatrix = nalgebra::SMatrix<f64, NX, NX>;
pub type InputMatrix = nalgebra::SMatrix<f64, NX, NU>;
pub type GainMatrix = nalgebra::SMatrix<f64, NU, NX>;
