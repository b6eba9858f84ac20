//! Spectral-Galerkin toolkit for the singular p-Laplacian parabolic system
//!
//! ```text
//! u_t - div((mu + |grad u|^2)^((p-2)/2) grad u) - nu Lap u = 0   in (0,T) x Omega
//! u = 0 on the boundary,  u(0) = u0,  p in (1,2]
//! ```
//!
//! on axis-aligned rectangles with homogeneous Dirichlet conditions. The
//! trial space is the analytic Dirichlet-Laplacian sine eigenbasis, so the
//! only discretization errors are quadrature and time stepping. On top of
//! the solver sits a measurement layer (norms, weighted suprema, Hoelder
//! seminorms, decay-rate fits) and an audit layer that checks quantitative
//! decay/regularity estimates of the flow against their predicted exponents.
//!
//! Everything numeric is generic over the scalar type through [`Real`];
//! the `*64` aliases below pin the `f64` instantiation used by the CLI and
//! the verification scenarios.

pub mod basis;
pub mod error;
pub mod estimates;
pub mod exponents;
pub mod norms;
pub mod operators;
pub mod scalar;
pub mod scenarios;
pub mod solver;

pub use error::Error;
pub use scalar::{real, Real};

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

pub type Domain64 = basis::Domain<f64>;
pub type Basis64 = basis::EigenBasis<f64>;
pub type Coeffs64 = basis::SpectralCoeffs<f64>;
pub type GridFn64 = basis::GridFunction<f64>;
pub type NormSeries64 = norms::NormSeries<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type Trajectory64 = solver::Trajectory<f64>;
pub type DualTrajectory64 = solver::DualTrajectory<f64>;
pub type ExponentSet64 = exponents::ExponentSet<f64>;

pub type Domain32 = basis::Domain<f32>;
pub type Basis32 = basis::EigenBasis<f32>;
pub type Coeffs32 = basis::SpectralCoeffs<f32>;
pub type GridFn32 = basis::GridFunction<f32>;
