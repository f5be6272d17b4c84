//! Numerical laboratory for the spatial localization of mild solutions of
//! the incompressible magnetohydrodynamics equations on `R^d`.
//!
//! Modules, bottom-up:
//! - [`grid`], [`fft`], [`field`]: uniform grids, transforms, `div`, the
//!   Leray projector and the heat semigroup.
//! - [`kernels`]: the kernels of `e^{t Delta} P grad` and `e^{t Delta} grad`.
//! - [`weighted`]: weighted Lebesgue norms, the E-norm and decay estimators.
//! - [`convolution`]: zero-padded free-space convolution and the weighted
//!   convolution inequalities for `(lambda + |x|)^{-N}`.
//! - [`indices`]: admissibility predicates and exponent arithmetic.
//! - [`solver`]: Duhamel/Picard time stepping of the integral equations.
//! - [`experiments`]: data generators, moment matrices and the decay
//!   experiments.
//! - [`report`], [`cli`]: CSV/manifest output and the command line.

pub mod cli;
pub mod convolution;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod grid;
pub mod indices;
pub mod kernels;
pub mod par;
pub mod report;
pub mod snapshot;
pub mod solver;
pub mod weighted;

pub use error::{Error, Result};
pub use field::{ScalarField, SpectralField, VectorField};
pub use grid::GridSpec;
