//! Local, L²-bounded commuting projections for the lowest-order de Rham complex
//! on tetrahedral meshes.
//!
//! The crate is organised bottom-up:
//!
//! * [`meshkit`]: oriented simplicial complexes, incidence matrices, stars,
//!   Alfeld splits, boundary partitions and a structured cube mesher.
//! * [`femspaces`]: Whitney bases, canonical degrees of freedom, quadrature,
//!   patch spaces with trace constraints and the Alfeld bubble.
//! * [`patchsolve`]: dense kernels, kernel bases, minimum-norm lifts and the
//!   bubble-weighted singular solves used on every patch.
//! * [`weights`]: the four families of local weight functions, with and
//!   without boundary conditions.
//! * [`projections`]: the projections built from those weights, plus
//!   commutation and stability measurements.
//! * [`poincare`]: discrete Poincaré constants on patches and Piola maps.
//! * [`verify`]: the check suites that back the command line driver.

pub mod error;
pub mod femspaces;
pub mod meshkit;
pub mod patchsolve;
pub mod poincare;
pub mod projections;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};

/// Points and vectors in physical space.
pub type Point = nalgebra::Vector3<f64>;
