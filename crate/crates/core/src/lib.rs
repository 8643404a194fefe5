//! Numerical laboratory for blow-up solutions of singular mean field
//! equations with Neumann boundary conditions on surfaces with boundary.
//!
//! The pipeline runs bottom-up: [`surface`] supplies geometry, meshes and
//! quadrature, [`elliptic`] the zero-mean Neumann solver, [`green`] the
//! Green/Robin functions, [`singular_config`] the singular data, [`bubbles`]
//! the projected bubbles, [`reduction`] the ansatz and reduced functional, and
//! [`linearized`] the linear theory and Newton correction.
//!
//! Closed-form kernels are generic over [`Real`]; the finite element layer is
//! concrete in `f64`. The aliases below fix the scalar for callers.

pub mod bubbles;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod fit;
pub mod green;
pub mod linearized;
pub mod real;
pub mod reduction;
pub mod singular_config;
pub mod surface;
pub mod tolerances;

pub use error::{Error, Result};
pub use real::Real;

/// Cutoff profile in double precision.
pub type Cutoff = surface::cutoff::CutoffProfile<f64>;
/// Bubble profile in double precision.
pub type BubbleProfile = bubbles::profile::BubbleProfile<f64>;
/// Scale constants in double precision.
pub type ScaleConstants = bubbles::profile::ScaleConstants<f64>;
/// Slope fit result in double precision.
pub type SlopeFit = fit::SlopeFit<f64>;

/// A point of the closed unit disk in ambient coordinates.
pub type Point = [f64; 2];
