//! Klein-Gordon fields on stationary and slowly varying backgrounds: the
//! two-component first-order formulation, quadratic mode pencils, Berry
//! connections, holonomies and the adiabatic phase equations.

// NaN-rejecting `!(x > 0.0)` checks are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod bessel;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod parallel;
pub mod propagator;
pub mod scenarios;
pub mod spacetime;
pub mod spectral;
pub mod twocomp;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
