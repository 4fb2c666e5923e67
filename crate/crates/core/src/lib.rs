//! Two-dimensional transformation-optics toolkit.
//!
//! The crate builds regularized acoustic cloaks by pushing forward material
//! coefficients under radial blow-up maps, measures how close the resulting
//! Dirichlet-to-Neumann map is to the free one, and computes the three
//! spectral problems tied to cloaking: the over-determined Neumann
//! (Schiffer) problem, the interior resonance problem with a tied boundary
//! trace, and generalized interior transmission eigenvalues.
//!
//! Everything is P1 finite elements on deterministic ring meshes, checked
//! against Bessel-function oracles from [`bessel`].

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cloak;
pub mod dtn;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod meshgen;
pub mod spectra;
pub mod xform;

pub use error::{Error, Result};

/// Planar point.
pub type Point = nalgebra::Vector2<f64>;
/// 2×2 real matrix (Jacobians, material tensors).
pub type Mat2 = nalgebra::Matrix2<f64>;
