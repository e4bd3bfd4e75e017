//! Γ, Mittag-Leffler functions and the fundamental matrices built from them.

pub mod bounds;
mod contour;
pub mod fundamental;
pub mod gamma;
pub mod mittag_leffler;
mod quadrature;

pub use bounds::{
    fit_decay_envelope, verify_kernel_bounds, BoundCheck, BoundReport, DecayEnvelope,
};
pub use fundamental::{phi_alpha, phi_alpha_j, phi_alpha_l1, phi_alpha_l2, Kernels};
pub use gamma::{gamma_fn, rgamma};
pub use mittag_leffler::{ml_matrix, ml_real, ml_scalar, MatrixMittagLeffler, MlEvalConfig};
