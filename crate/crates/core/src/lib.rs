//! Fourier-spectral machinery for boundary value problems of divergence-form
//! elliptic systems `div A grad u = 0` on the unit disk.
//!
//! The crate follows the first-order-system approach: the equation is
//! rewritten as a vector ODE for the conormal gradient on the half-cylinder
//! `(0, oo) x S^1`, the generator is a perturbed Dirac-type operator built
//! from the transformed coefficients, and boundary value problems reduce to
//! inverting boundary restriction maps of (perturbed) Hardy projections.
//! A verification harness turns the operator identities underlying the
//! method into numerical checks.

pub mod battery;
pub mod calculus;
pub mod coeff;
pub mod error;
pub mod fd;
pub mod fourier;
pub mod linalg;
pub mod norms;
pub mod operators;
pub mod serial;
pub mod solver;

pub use error::{Error, Result};
