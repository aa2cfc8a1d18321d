//! Harnack chains, closed-form kernels, value functions and Monte Carlo
//! density checks for a family of hypoelliptic model operators.

pub mod asian;
pub mod error;
pub mod geometry;
pub mod harnack;
pub mod heisenberg;
pub mod kolmogorov;
pub mod montecarlo;
pub mod ode;
pub mod optimize;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod quadratic;
pub mod quadrature;

pub use error::{Error, Result};
