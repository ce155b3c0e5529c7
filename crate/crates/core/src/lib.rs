//! Crouzeix-Raviart edge directors for Helfrich-type curvature energies of
//! triangulated graph surfaces.

// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod directors;
pub mod energy;
pub mod error;
pub mod io;
pub mod mesh;
pub mod optimize;
pub mod quadrature;
pub mod surfaces;

pub use error::{EdgeKey, Error, Result};
