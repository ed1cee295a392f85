//! Spline dimensional decomposition (SDD) surrogate modeling for forward
//! uncertainty quantification.
//!
//! The crate builds S-variate expansions in measure-consistent orthonormal
//! B-splines, places internal knots at maximum-gradient points of the sampled
//! response profile, estimates expansion coefficients by least squares or
//! cross-validated LASSO, and propagates input randomness to output
//! statistics (mean, variance, CDF, failure probability). A closed-form
//! two-degree-of-freedom damped oscillator is included as a desk-scale
//! benchmark and reference-solution generator.
//!
//! Data-parallel inner loops (sampling, batch prediction, Monte Carlo
//! references) run on rayon when the default `parallel` feature is enabled
//! and fall back to an equivalent sequential path otherwise. Both paths
//! partition work into fixed-size chunks, so results are bit-identical
//! across feature flags and worker counts.

pub mod basis;
pub mod bspline;
pub mod dataset;
pub mod distributions;
pub mod dynamics;
mod error;
pub(crate) mod exec;
pub mod knot_select;
pub mod quadrature;
pub mod regression;
pub(crate) mod rng;
pub mod surrogate;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
