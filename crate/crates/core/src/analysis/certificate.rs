use serde::{Deserialize, Serialize};

use super::window::{window_norm, WindowKind};
use crate::error::{CglError, Result};
use crate::estimates::{estimate_sobolev_constant, estimate_splitting_constant, gns_exponents};
use crate::evolution::{EvolutionParams, Forcing, Stepper};
use crate::field::ComplexField;
use crate::monotone::{phi, psi_r};
use crate::spectral::Space;

/// Constants of the small-data global bound `phi(U(t)) < N r^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallDataCertificate {
    pub lambda1: f64,
    pub delta0: f64,
    pub delta: f64,
    /// Measured constant of `psi_q <= C phi^{q/2}`.
    pub sobolev_constant: f64,
    /// Coercivity level `eps0 = (delta0 / (2 C kappa q))^{2/(q-2)}`.
    pub eps0: f64,
    pub n1: f64,
    pub n2: f64,
    /// `eps_lambda = lambda^2 / (8 (kappa^2 + beta^2))`.
    pub eps_lambda: f64,
    /// Measured splitting constant at `eps_lambda`.
    pub splitting_constant: f64,
    pub chi: f64,
    pub n: f64,
    /// `min(eps0, 1) / N`.
    pub eps1: f64,
    /// Admissible radius, `eps1 / 2` unless set otherwise.
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SmallDataCertificate {
    pub fn with_radius(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < self.eps1) {
            return Err(CglError::param("radius", format!("must lie in (0, {}), got {r}", self.eps1)));
        }
        self.radius = r;
        Ok(self)
    }

    /// The bound `N r^2`.
    pub fn energy_bound(&self) -> f64 {
        self.n * self.radius * self.radius
    }
}

/// Evaluates every certificate constant from given embedding constants.
#[allow(clippy::too_many_arguments)]
pub fn certificate_from_constants(
    params: &EvolutionParams,
    lambda1: f64,
    dim: usize,
    sobolev_constant: f64,
    splitting_constant: f64,
    trials: usize,
    seed: u64,
) -> Result<SmallDataCertificate> {
    let p = params;
    p.validate(dim)?;
    if p.gamma >= p.lambda * lambda1 {
        return Err(CglError::NotApplicable(format!(
            "gamma = {} is not below lambda * lambda1 = {}",
            p.gamma,
            p.lambda * lambda1
        )));
    }
    if !(p.kappa > 0.0) {
        return Err(CglError::NotApplicable("kappa must be positive".into()));
    }
    let exps = gns_exponents(p.q, dim)?;
    let delta0 = 2.0 * (p.lambda - p.gamma / lambda1);
    let delta = 0.5 * delta0;
    let eps0 = (delta0 / (2.0 * sobolev_constant * p.kappa * p.q)).powf(2.0 / (p.q - 2.0));
    let n1 = (2.0 / lambda1).sqrt() + 1.0 / (1.0 - (-delta * lambda1 / 2.0).exp());
    let n2 = (n1 + 0.5 * n1 * n1) / delta;
    let eps_lambda = p.lambda.powi(2) / (8.0 * (p.kappa.powi(2) + p.beta.powi(2)));
    let n = 2.0
        + ((2.0 * p.gamma_plus() + splitting_constant) * n2 + 1.0 / p.lambda)
            / (1.0 - (-p.lambda * lambda1 / 4.0).exp());
    let eps1 = eps0.min(1.0) / n;
    Ok(SmallDataCertificate {
        lambda1,
        delta0,
        delta,
        sobolev_constant,
        eps0,
        n1,
        n2,
        eps_lambda,
        splitting_constant,
        chi: exps.chi,
        n,
        eps1,
        radius: 0.5 * eps1,
        trials,
        seed,
    })
}

/// Certificate with both embedding constants measured on `space`.
pub fn small_data_certificate(
    params: &EvolutionParams,
    space: &Space,
    trials: usize,
    seed: u64,
) -> Result<SmallDataCertificate> {
    let lambda1 = space.lambda1();
    let dim = space.domain().dim();
    if params.gamma >= params.lambda * lambda1 {
        return Err(CglError::NotApplicable(format!(
            "gamma = {} is not below lambda * lambda1 = {}",
            params.gamma,
            params.lambda * lambda1
        )));
    }
    let exps = gns_exponents(params.q, dim)?;
    let c = estimate_sobolev_constant(space, params.q, trials, seed)?.constant;
    let eps_lambda = params.lambda.powi(2) / (8.0 * (params.kappa.powi(2) + params.beta.powi(2)));
    let c_eps = estimate_splitting_constant(space, params.q, eps_lambda, exps.chi, trials, seed)?.constant;
    certificate_from_constants(params, lambda1, dim, c, c_eps, trials, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub passed: bool,
    pub blowup: bool,
    pub steps: usize,
    pub max_phi: f64,
    /// `N r^2` and `1 - max phi / (N r^2)`.
    pub bound_sq: f64,
    pub margin_sq: f64,
    /// `N r` and `1 - max phi / (N r)`.
    pub bound_linear: f64,
    pub margin_linear: f64,
    /// `phi` never increased between steps.
    pub phi_monotone: bool,
    /// Steps with `phi < eps0` at which coercivity was tested.
    pub coercivity_checks: usize,
    /// Coercivity failures remaining after the single re-estimation.
    pub coercivity_failures: usize,
    pub reestimated: bool,
    /// Steps where `|U|^2/2` grew faster than `|F| |U| - delta phi` allows.
    pub energy_defects: usize,
    pub certificate: SmallDataCertificate,
}

/// `(lambda dphi(U) - kappa dpsi_q(U) - gamma U, U) - delta phi(U)`.
fn coercivity_gap(u: &ComplexField, params: &EvolutionParams, delta: f64) -> f64 {
    let p = phi(u);
    let psi = psi_r(u, params.q).unwrap_or(f64::INFINITY);
    2.0 * params.lambda * p - params.kappa * params.q * psi - params.gamma * u.l2_norm_sq() - delta * p
}

/// Runs (ACGL) over `params.horizon` and checks `phi(U(t)) < N r^2` with the
/// certificate's radius, together with the coercivity inequality whenever
/// `phi(U) < eps0`.
pub fn monitored_global_run(
    params: &EvolutionParams,
    u0: &ComplexField,
    forcing: &Forcing,
    certificate: &SmallDataCertificate,
) -> Result<MonitorReport> {
    let space = u0.space();
    let r = certificate.radius;
    if !(r > 0.0 && r < certificate.eps1) {
        return Err(CglError::Precondition(format!(
            "radius {r} must lie in (0, eps1 = {})",
            certificate.eps1
        )));
    }
    let phi0 = phi(u0);
    if phi0 > r * r * (1.0 + 1e-12) {
        return Err(CglError::Precondition(format!("phi(U0) = {phi0} exceeds r^2 = {}", r * r)));
    }
    let wn = window_norm(forcing, space, params.horizon, params.dt, WindowKind::L2)?;
    if wn > r * (1.0 + 1e-12) {
        return Err(CglError::Precondition(format!("window norm of F = {wn} exceeds r = {r}")));
    }

    let mut cert = certificate.clone();
    let mut reestimated = false;
    let mut stepper = Stepper::new(space, params, forcing)?;
    let times = crate::evolution::time_grid(params.horizon, params.dt);
    let mut u = u0.clone();
    let mut energy = phi0;
    let mut max_phi = phi0;
    let mut phi_monotone = true;
    let mut checks = 0;
    let mut failures = 0;
    let mut energy_defects = 0;
    let mut blowup = false;
    let mut steps = 0;

    let mut check = |u: &ComplexField, energy: f64, cert: &mut SmallDataCertificate, reest: &mut bool| -> Result<()> {
        if energy >= cert.eps0 {
            return Ok(());
        }
        checks += 1;
        if coercivity_gap(u, params, cert.delta) >= -1e-12 * energy.max(f64::MIN_POSITIVE) {
            return Ok(());
        }
        if !*reest {
            *reest = true;
            let fresh = small_data_certificate(params, space, cert.trials * 2, cert.seed.wrapping_add(1))?;
            let radius = cert.radius;
            *cert = SmallDataCertificate { radius, ..fresh };
            if coercivity_gap(u, params, cert.delta) >= 0.0 {
                return Ok(());
            }
        }
        failures += 1;
        Ok(())
    };

    check(&u, energy, &mut cert, &mut reestimated)?;
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let next = match stepper.step(&u, w[0], dt) {
            Ok(v) if v.is_finite() => v,
            _ => {
                blowup = true;
                break;
            }
        };
        let e = phi(&next);
        if !e.is_finite() {
            blowup = true;
            break;
        }
        steps += 1;
        if e > energy {
            phi_monotone = false;
        }
        let f_norm = forcing.at(space, w[0]).l2_norm();
        let lhs = 0.5 * (next.l2_norm_sq() - u.l2_norm_sq()) / dt + cert.delta * e;
        if lhs > f_norm * u.l2_norm().max(next.l2_norm()) * (1.0 + 1e-9) + 1e-15 {
            energy_defects += 1;
        }
        max_phi = max_phi.max(e);
        u = next;
        energy = e;
        check(&u, energy, &mut cert, &mut reestimated)?;
    }

    let bound_sq = cert.n * r * r;
    let bound_linear = cert.n * r;
    Ok(MonitorReport {
        passed: !blowup && max_phi < bound_sq,
        blowup,
        steps,
        max_phi,
        bound_sq,
        margin_sq: 1.0 - max_phi / bound_sq,
        bound_linear,
        margin_linear: 1.0 - max_phi / bound_linear,
        phi_monotone,
        coercivity_checks: checks,
        coercivity_failures: failures,
        reestimated,
        energy_defects,
        certificate: cert,
    })
}
