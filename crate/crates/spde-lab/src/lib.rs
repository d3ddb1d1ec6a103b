//! Numerical laboratory for stochastic heat-type PDEs
//! du = (a^ij u_xixj + b^i u_xi + c u) dt + h(u) dF driven by Gaussian noise
//! that is white in time and spatially correlated by a kernel f, with a
//! sub-linear noise coefficient h(u) ~ u^lambda.
//!
//! The crate provides:
//! - a correlation-kernel catalog with spectral measures and integrability
//!   checkers ([`kernels`]),
//! - exact-covariance colored-noise synthesis on periodic grids ([`noise`]),
//! - a positivity-preserving explicit solver with validated coefficients
//!   ([`solver`]),
//! - the observables the phenomenon is measured by: support radius, shell
//!   integrals, weighted sup norms, Hölder seminorms ([`observables`]),
//! - numerical verification of the supporting integral inequalities
//!   ([`lemma_lab`]),
//! - a reproducible Monte Carlo sweep harness ([`sweep`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod config;
pub mod error;
pub mod fft;
pub mod grid;
pub mod kernels;
pub mod lemma_lab;
pub mod noise;
pub mod numeric;
pub mod observables;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
