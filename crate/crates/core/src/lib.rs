//! Prescribed scalar curvature in the null case on the flat torus.
//!
//! Spectral calculus on `[0,1)^n`, constrained subcritical minimization,
//! continuation of the exponent toward `2* = 2n/(n-2)`, concentration
//! diagnostics and Green-function machinery.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod error;
pub mod functionals;
pub mod green;
pub mod snapshot;
pub mod subcritical;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub mod cli;
