//! Structure-preserving 2D incompressible Navier-Stokes solver on a periodic
//! staggered grid, together with a large-eddy-simulation closure-modeling
//! laboratory: a face-averaging coarse-graining filter, classical and
//! neural-network closure models (Smagorinsky, CNN, divergence-form CNN,
//! skew-symmetric, clipped CNN), solver-in-the-loop training with exact
//! reverse-mode gradients, and turbulence diagnostics.
//!
//! The spatial discretization conserves mass, momentum and (for zero
//! viscosity) kinetic energy exactly, up to round-off and the time
//! integration error. These identities are load-bearing: the skew-symmetric
//! closure architecture inherits its stability guarantee from them.

pub mod checkpoint;
pub mod closures;
pub mod dataset;
pub mod diagnostics;
mod error;
pub mod fft;
pub mod field;
pub mod filtering;
pub mod grid;
pub mod integrator;
pub mod nn;
pub mod ops;
pub mod pipeline;
pub mod projection;
pub mod velocity;

pub use error::{Error, Result};
pub use field::{ScalarField, ScalarLattice, Staggering};
pub use grid::Grid;
pub use velocity::{PressureField, StaggeredVelocity};
