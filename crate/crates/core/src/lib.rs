//! Numerical stochastic homogenization for electrorheological stress laws
//! with random variable-exponent growth.
//!
//! The crate is organised bottom-up:
//!
//! - [`media`]: periodic random media (Voronoi–Poisson exponents, Bernoulli
//!   percolation, laminates, deterministic test media) and the ergodic
//!   sampling check.
//! - [`varexp`]: symmetric tensors, power-law stress laws
//!   `a(y)|ξ|^{p(y)-2}ξ`, growth constants, Luxemburg norms and the exponent
//!   admissibility gate.
//! - [`cell`]: the periodic corrector problem solved as a convex
//!   minimization over stream functions.
//! - [`effective`]: Monte-Carlo estimates of the effective tensor, the Orlicz
//!   integrand `f` and its conjugate, plus property verification.
//! - [`flow`]: fine-scale and homogenized 2D unsteady flow with energy
//!   ledgers and the ε-convergence study.
//! - [`bench`]: configuration, pipeline orchestration and reports.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod bench;
pub mod cell;
pub mod effective;
pub mod error;
pub mod flow;
pub mod io;
pub mod media;
pub mod ncg;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod varexp;

pub use error::{Error, Result};
