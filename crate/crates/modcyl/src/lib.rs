//! Modular flow and modular Hamiltonian kernels for massless Dirac fermions
//! on a cylinder, restricted to an interval.
//!
//! The crate evaluates the closed-form kernels for the antiperiodic vacuum
//! and for every periodic ground state, builds the resolvent of the
//! restricted two-point operator, and cross-checks everything against a
//! discretized spectral-calculus oracle.

pub mod error;
pub mod geometry;
pub mod distributions;
pub mod states;
pub mod correlators;
pub mod resolvent;
pub mod modular;
pub mod oracle;
pub mod suite;
pub mod cli;

pub use error::{Error, Result};
pub use geometry::{Chirality, Geometry, IntervalPoint};
pub use num_complex::Complex64;
