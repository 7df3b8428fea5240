//! Numerics for the twisted Lorentzian spectral triple of 1+1 dimensional
//! κ-Minkowski space-time.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: grids, grid functions, quadrature, FFT derivatives and shifts,
//!   Hermitian eigenvalue bounds.
//! - [`algebra`]: plane-wave sums and mixed-variable symbols with the star
//!   product, involution, twist and twisted derivations.
//! - [`representation`]: the representations `π_ν` on `L²(ℝ)`, the Dirac
//!   operator, the Krein product and the twisted-axiom verifier.
//! - [`cone`]: membership tests for the causal cone.
//! - [`states`]: Gaussian pure states, expectation values and causal ordering.
//! - [`evolution`]: the transport equation and residual checkers for causal
//!   evolution conditions.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cone;
pub mod error;
pub mod evolution;
pub mod numerics;
pub mod representation;
pub mod states;

pub use error::{Error, Result};
