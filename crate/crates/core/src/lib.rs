//! Heat kernels, Schrödinger semigroups and Kato-class perturbations on
//! model Riemannian spaces and weighted graphs.
//!
//! Continuum objects (kernels, Dynkin functionals) live on the model spaces
//! of [`geometry`]; their finite analogs are the assembled operators of
//! [`lattice`], on which every inequality can be checked exactly.

// `!(x > 0.0)` guards reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the matrix formulas; estimator signatures mirror their math.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod domination;
pub mod error;
pub mod geometry;
pub mod kato;
pub mod kernels;
pub mod krylov;
pub mod lattice;
pub mod linalg;
pub mod quadrature;
pub mod semigroup;
pub mod stochastics;

pub use error::{Error, Result};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
