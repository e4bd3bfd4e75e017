//! Numerics for linear Caputo fractional systems with point delays:
//! Mittag-Leffler kernels, a product-integration Volterra solver, and
//! contraction-type stability certificates checked against simulation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod exec;
pub mod format;
pub mod io;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
