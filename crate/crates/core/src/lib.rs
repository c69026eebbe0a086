//! Numerical laboratory for the nonlinear Kraichnan equation
//!
//! ```text
//! d/ds H(s,t) = ∫_t^s H(s,u) H(u,t) k(s,u) du,   H(t,t) = 1,
//! ```
//!
//! with a nonnegative bounded covariance kernel `k`. The crate provides a
//! time-domain Volterra solver together with three independent checks on it:
//! the non-crossing pairing series, exact Bessel-function formulas for
//! exponential kernels, and a random-matrix Monte Carlo estimate.
//!
//! Module map:
//!
//! - [`kernels`]: kernel families and their evaluation.
//! - [`volterra`]: stationary and two-time solvers with exponential tilting.
//! - [`ncp`]: non-crossing pairings, Wick moments, truncated series.
//! - [`bessel`]: real-order Bessel `J`, zeros, ratio continued fraction.
//! - [`spectral`]: Laplace transforms and Lyapunov exponent solvers.
//! - [`asymptotics`]: fits of `A e^{λt} t^p` to solutions.
//! - [`matrix_oracle`]: Monte Carlo over random symmetric matrix processes.
//! - [`validate`]: the invariant suite behind `kraichnan validate`.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bessel;
mod error;
pub mod kernels;
pub mod matrix_oracle;
pub mod ncp;
pub mod numeric;
pub mod spectral;
pub mod validate;
pub mod volterra;

pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use volterra::{StationarySolution, TwoTimeSolution};

/// Version string embedded in every artifact.
pub const ARTIFACT_VERSION: &str = concat!("kraichnan ", env!("CARGO_PKG_VERSION"));
