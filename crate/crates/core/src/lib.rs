//! Numerical toolkit for quasilinear nonlocal problems in fractional
//! Orlicz-Sobolev spaces.
//!
//! The crate is organized around the objects of the W^{s,G} framework:
//!
//! - [`young`]: Young-function calculus (evaluation, inversion, complementary
//!   function, Sobolev conjugate, growth indices, structural predicates).
//! - [`space`]: discretized domains, the modulars Φ_G and Φ_{s,G}, Luxemburg
//!   norms by monotone bisection, and the Hölder pairing.
//! - [`operator`]: the fractional g-Laplacian in weak and pointwise form and
//!   the weak-equation residual.
//! - [`variational`]: the energy functional, its Gâteaux derivative, the
//!   reaction-term condition checks, and a discrete mountain-pass solver.
//! - [`diagnostics`]: finite empirical surrogates for the radial-embedding,
//!   vanishing, and recentring compactness mechanisms.

pub mod diagnostics;
pub mod error;
pub mod operator;
pub mod quad;
pub mod space;
pub mod variational;
pub mod young;

pub use error::{Error, Result};
