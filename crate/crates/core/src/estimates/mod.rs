//! A priori estimates as computable reports: interpolation exponents,
//! energy identities and their envelopes, empirical embedding constants,
//! the unit-window Gronwall bound, the pointwise Lipschitz bounds of the
//! nonlinearity, and the continuous-dependence envelope.

mod constants;
mod energy;
mod exponents;
mod gronwall;
mod lipschitz;
mod uniqueness;

pub use constants::{
    estimate_interpolation_constant, estimate_sobolev_constant, estimate_splitting_constant,
    interpolation_ratio, sobolev_ratio, splitting_defect, ConstantEstimate, MIN_TRIALS,
};
pub use energy::{energy_identity_report, first_energy_constant, second_energy_constant, EnergyReport};
pub use exponents::{gns_exponents, GnsExponents};
pub use gronwall::{gronwall_envelope, window_sup_integral, GronwallCheck, GronwallEnvelope};
pub use lipschitz::{
    check_pointwise_lipschitz, lipschitz_constant, magnitude_constant, Counterexample, LipschitzReport,
};
pub use uniqueness::{uniqueness_envelope, UniquenessReport};
