//! Estimators and verification routines.

pub mod covering;
pub mod kpz;
pub mod laplace;
pub mod lq;
pub mod scaling;
pub mod spectrum;
pub mod stats;
pub mod tail;

pub use covering::{covering_sums, dimension_estimate, CoveringSumTable, SetSpec};
pub use kpz::{kpz_solve, kpz_solve_dual};
pub use laplace::verify_laplace;
pub use lq::lq_spectrum;
pub use scaling::verify_perfect_scaling;
pub use spectrum::{estimate_spectrum, MassSamples, SpectrumFit};
pub use tail::{hill_plateau, hill_tail_index};
