//! Weighted inequalities with mixed radial-angular integrability: index
//! arithmetic, admissibility deciders, mixed-norm quadrature, singular
//! integrals, kernel evaluation, inequality probes and a small-data
//! Navier–Stokes Picard iterator.

pub mod admissibility;
pub mod cli;
pub mod error;
pub mod grids;
pub mod index;
pub mod kernels;
pub mod nse;
pub mod probe;
pub mod quad;
pub mod report;
pub mod singint;
pub mod spectral;

pub use error::{Error, Result};
