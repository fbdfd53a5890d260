//! Spectral simulation of the complex Ginzburg-Landau equation
//!
//! ```text
//! dU/dt + (lambda + alpha I) dphi(U) - (kappa + beta I) dpsi_q(U) - gamma U = F
//! ```
//!
//! on intervals and rectangles with homogeneous Dirichlet data, written in
//! real-pair form. Alongside the integrators the crate turns the standard
//! a priori machinery for this equation (energy identities, Yosida
//! regularization, the Picard construction of solutions, the blow-up
//! alternative and the small-data global bound) into checkable reports.

// negated comparisons are how NaN inputs get rejected; mode loops index
// several parallel arrays at once
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod field;
pub mod monotone;
pub mod spectral;

pub use error::{CglError, Result};
pub use evolution::{
    acgl_residual, fixed_point_solve, integrate_acgl, solve_aeh_mu, solve_linear_aeh, step_acgl,
    EvolutionParams, FixedPointReport, Forcing, Scheme, SourceSeries, Stepper, Trajectory,
};
pub use field::{apply_i, complex_scale, inner_l2, inner_l2_skew, random_field, ComplexField, ModePair};
pub use monotone::{
    grad_phi, grad_psi_r, moreau_yosida_phi, phi, psi_r, resolvent_phi, resolvent_psi_r,
    yosida_phi, yosida_psi_r, YosidaParam,
};
pub use spectral::{build_basis, integrate, Domain, ModeVector, RealGrid, Space, SpectralBasis};
