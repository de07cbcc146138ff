//! Gaussian multiplicative chaos on regular lattices, its atomic dual built
//! from an independently scattered stable measure, and the statistics needed to
//! check power-law spectra, Laplace duality, perfect scaling and KPZ relations.
//!
//! The crate is organized bottom-up:
//!
//! * [`kernels`]: sigma-positive covariance families and their level increments.
//! * [`field`]: Gaussian layer sampling (circulant embedding or dense Cholesky).
//! * [`chaos`]: the lattice chaos measure and the spectrum `xi`.
//! * [`atomic`]: stable atoms, the direct and subordinated atomic measures.
//! * [`analysis`]: estimators and verification routines.
//!
//! Replica loops go through [`par`], which uses rayon when the `parallel`
//! feature is on and falls back to a plain loop otherwise. Results are always
//! collected in replica order, so outputs do not depend on the thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod atomic;
pub mod chaos;
pub mod error;
pub mod field;
pub mod kernels;
pub mod lattice;
pub mod par;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
