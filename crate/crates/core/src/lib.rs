//! Numerical toolkit for the gradient-squared discrete Gaussian free field.
//!
//! The field `Φ_eps(x) = Σ_i :(∇_i Γ(x))^2:` is built from the discrete
//! Gaussian free field `Γ` with zero boundary conditions on `U_eps = U/eps ∩ Z^d`.
//! The crate provides its Green's function and transfer currents, exact
//! k-point moments and cumulants together with brute-force oracles, the
//! infinite-volume constant `χ`, a Monte Carlo sampler, and the scaling-limit
//! experiments.

pub mod error;
pub mod combinatorics;
pub mod continuum;
pub mod correlation;
pub mod experiments;
pub mod greens;
pub mod lattice;
pub mod quadrature;
pub mod sampler;

pub use error::{Error, Result};
