//! Wavenumber-domain reflection matrices and nonlocal admittance boundary
//! conditions for 3D Helmholtz BEM.
//!
//! The pipeline: simulate rigid-reflector pressures with [`bem`], convert
//! them to plane-wave spectra with [`wavespace`], fit the reflection matrix
//! with [`estimation`], turn it into a spatial admittance with
//! [`admittance`], and feed that back into [`bem::solve_nonlocal`].

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admittance;
pub mod bem;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod io;
pub mod numerics;
pub mod wavespace;

pub use error::{Error, Result};
pub use numerics::{Complex64, ComplexMatrix};

/// 3-vector in meters.
pub type Vec3 = [f64; 3];
