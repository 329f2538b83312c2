//! Numerical core for verifying determinant bounds of fermionic covariances.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`grassmann`]: an exact exterior-algebra engine with wedge and interior
//!   products, chronological products and Grassmann Gaussian integration.
//! * [`covariance`]: the imaginary-time free-fermion covariance on a finite
//!   torus, its Matsubara representation and an explicit Gram construction.
//! * [`detbound`]: randomized harnesses for determinant bounds.
//! * [`scales`]: the frequency-space UV/IR split, Gram constants of the IR
//!   part and decay constants.
//! * [`effaction`]: exact effective actions on tiny index sets and the
//!   perturbative remainder bound.
//!
//! IO, configuration and the command line live in the `chronodet` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod covariance;
pub mod detbound;
pub mod effaction;
mod error;
pub mod grassmann;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod scales;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Multiplicative slack applied to every upper-bound assertion.
pub const BOUND_SLACK: f64 = 1e-9;
