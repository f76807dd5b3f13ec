//! Koornwinder-type W-system on the reference triangle.
//!
//! The crate evaluates the orthonormal family `φ_{n,k} = √w p_{n,k}`, builds
//! the skew-symmetric differentiation matrices `X` and `Y` from
//! one-dimensional coupling integrals, applies them in linear time per row,
//! expands functions in the basis and lifts Dirichlet data off the boundary.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod basis;
pub mod boundary_lift;
pub mod cli;
pub mod coupling;
pub mod diffmat;
pub mod error;
pub mod evolve;
pub mod fast_apply;
pub mod registry;
pub mod special_fn;

pub use error::{Error, Result};
