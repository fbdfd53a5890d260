//! Empirical embedding constants.
//!
//! Every estimator maximizes a ratio over seeded random fields, each refined
//! by a short coordinate ascent on its lowest modes. The maxima are lower
//! bounds for the true constants; the returned values add a safety factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::evolution::critical_exponent;
use crate::field::{random_field, ComplexField};
use crate::monotone::{grad_phi_norm_sq, phi, psi_r};
use crate::spectral::Space;

pub const MIN_TRIALS: usize = 100;
const SAFETY: f64 = 2.0;
const DECAYS: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
const CLIMB_MODES: usize = 12;
const CLIMB_STEPS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    /// Largest ratio observed.
    pub observed: f64,
    /// Value to use downstream (observed times the safety factor, floored
    /// where the estimator requires it).
    pub constant: f64,
    pub trials: usize,
    pub seed: u64,
}

/// `psi_q(U) / phi(U)^{q/2}`, invariant under `U -> cU`.
pub fn sobolev_ratio(u: &ComplexField, q: f64) -> f64 {
    let p = phi(u);
    if p == 0.0 {
        return 0.0;
    }
    psi_r(u, q).unwrap_or(f64::NAN) / p.powf(0.5 * q)
}

/// `|U|_{L^q} / (phi(U)^{(1-eta)/2} |U|_{L2}^eta)`.
pub fn interpolation_ratio(u: &ComplexField, q: f64, eta: f64) -> f64 {
    let p = phi(u);
    let l2 = u.l2_norm();
    if p == 0.0 || l2 == 0.0 {
        return 0.0;
    }
    u.lr_norm(q) / (p.powf(0.5 * (1.0 - eta)) * l2.powf(eta))
}

/// Scale factors probed by the splitting estimator (`phi(sV) = s^2` for
/// `phi(V) = 1`).
fn splitting_scales() -> impl Iterator<Item = f64> {
    (0..=40).map(|i| 10f64.powf(-4.0 + 0.1 * i as f64))
}

/// `max_s (|dpsi_q(sV)|^2 - eps (|dphi(sV)|^2 + |sV|^2)) / phi(sV)^chi` over
/// amplitudes with `phi(sV) <= 1`, where `V = U / sqrt(phi(U))`.
pub fn splitting_defect(u: &ComplexField, q: f64, eps: f64, chi: f64) -> f64 {
    let p = phi(u);
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    let v = u.scale(1.0 / p.sqrt());
    let a = v.lr_norm(2.0 * (q - 1.0)).powf(2.0 * (q - 1.0));
    let b = grad_phi_norm_sq(&v) + v.l2_norm_sq();
    splitting_scales()
        .map(|s| (s.powf(2.0 * (q - 1.0)) * a - eps * s * s * b) / s.powf(2.0 * chi))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_common(space: &Space, q: f64, trials: usize) -> Result<()> {
    let dim = space.domain().dim();
    let critical = critical_exponent(dim);
    if q >= critical {
        return Err(CglError::SupercriticalExponent { q, dim, critical });
    }
    if !(q > 2.0) {
        return Err(CglError::param("q", format!("must exceed 2, got {q}")));
    }
    if trials < MIN_TRIALS {
        return Err(CglError::param("trials", format!("need at least {MIN_TRIALS}, got {trials}")));
    }
    Ok(())
}

/// Coordinate ascent on the lowest modes starting from `u`.
fn climb(u: ComplexField, rng: &mut ChaCha8Rng, objective: &(impl Fn(&ComplexField) -> f64 + Sync)) -> f64 {
    let space = u.space().clone();
    let mut modes = u.to_modes();
    let mut best = objective(&u);
    if !best.is_finite() {
        best = f64::NEG_INFINITY;
    }
    let len = modes.c1.len().min(CLIMB_MODES);
    let norm = modes.c1.iter().chain(&modes.c2).map(|x| x * x).sum::<f64>().sqrt();
    let mut step = 0.3 * norm.max(f64::MIN_POSITIVE);
    for _ in 0..CLIMB_STEPS {
        let k = rng.random_range(0..len);
        let second = rng.random_bool(0.5);
        let delta = if rng.random_bool(0.5) { step } else { -step };
        let mut trial = modes.clone();
        if second {
            trial.c2[k] += delta;
        } else {
            trial.c1[k] += delta;
        }
        let val = objective(&ComplexField::from_modes(&space, &trial));
        if val > best {
            best = val;
            modes = trial;
        } else {
            step *= 0.7;
        }
    }
    best
}

fn maximize(space: &Space, trials: usize, seed: u64, objective: impl Fn(&ComplexField) -> f64 + Sync) -> f64 {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let field_seed: u64 = rng.random();
            let u = random_field(space, field_seed, DECAYS[i % DECAYS.len()]).expect("decay is nonnegative");
            climb(u, &mut rng, &objective)
        })
        .filter(|v| !v.is_nan())
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Constant `C >= 1` with `psi_q(U) <= C phi(U)^{q/2}`.
pub fn estimate_sobolev_constant(space: &Space, q: f64, trials: usize, seed: u64) -> Result<ConstantEstimate> {
    check_common(space, q, trials)?;
    let observed = maximize(space, trials, seed, |u| sobolev_ratio(u, q));
    Ok(ConstantEstimate {
        observed,
        constant: (SAFETY * observed).max(1.0),
        trials,
        seed,
    })
}

/// Constant `C >= 1` with `|W|_{L^q} <= C phi(W)^{(1-eta)/2} |W|_{L2}^eta`.
pub fn estimate_interpolation_constant(
    space: &Space,
    q: f64,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    check_common(space, q, trials)?;
    let observed = maximize(space, trials, seed, |u| interpolation_ratio(u, q, eta));
    Ok(ConstantEstimate {
        observed,
        constant: (SAFETY * observed).max(1.0),
        trials,
        seed,
    })
}

/// Constant `C_eps >= 0` with
/// `|dpsi_q(U)|^2 <= eps (|dphi(U)|^2 + |U|^2) + C_eps phi(U)^chi` on
/// fields with `phi(U) <= 1`.
pub fn estimate_splitting_constant(
    space: &Space,
    q: f64,
    eps: f64,
    chi: f64,
    trials: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    check_common(space, q, trials)?;
    if !(eps > 0.0) {
        return Err(CglError::param("eps", format!("must be positive, got {eps}")));
    }
    let observed = maximize(space, trials, seed, |u| splitting_defect(u, q, eps, chi));
    Ok(ConstantEstimate {
        observed,
        constant: SAFETY * observed.max(0.0),
        trials,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::gns_exponents;
    use crate::field::random_field;
    use crate::monotone::grad_psi_r;
    use crate::spectral::Domain;
    use std::f64::consts::PI;

    fn space() -> Space {
        Space::new(Domain::interval(PI, 64).unwrap())
    }

    #[test]
    fn sine_ratio_closed_form() {
        let s = space();
        let u = ComplexField::eigenmode(&s, [1, 0], 1.0);
        let r = sobolev_ratio(&u, 4.0);
        assert!((r - 3.0 / (2.0 * PI)).abs() < 1e-10, "{r}");
        assert!((sobolev_ratio(&u.scale(7.3), 4.0) - r).abs() < 1e-12);
    }

    #[test]
    fn estimate_bounds_sine_and_grows_with_trials() {
        let s = space();
        let a = estimate_sobolev_constant(&s, 4.0, 100, 3).unwrap();
        let b = estimate_sobolev_constant(&s, 4.0, 200, 3).unwrap();
        assert!(a.observed >= 3.0 / (2.0 * PI));
        assert!(b.observed >= a.observed);
        assert!(a.constant >= 1.0);
        assert!(estimate_sobolev_constant(&s, 4.0, 10, 3).is_err());
    }

    #[test]
    fn interpolation_holds_on_fresh_fields() {
        let s = space();
        let e = gns_exponents(4.0, 1).unwrap();
        let c = estimate_interpolation_constant(&s, 4.0, e.eta, 200, 5).unwrap().constant;
        for seed in 1000..1100 {
            let w = random_field(&s, seed, 0.75).unwrap();
            let lhs = w.lr_norm(4.0);
            assert!(lhs <= c * phi(&w).powf(0.5 * (1.0 - e.eta)) * w.l2_norm().powf(e.eta));
            let w2 = w.scale(3.0);
            assert!((interpolation_ratio(&w2, 4.0, e.eta) - interpolation_ratio(&w, 4.0, e.eta)).abs() < 1e-12);
        }
    }

    #[test]
    fn splitting_holds_below_unit_energy() {
        let s = space();
        let e = gns_exponents(4.0, 1).unwrap();
        for eps in [1e-1, 1e-2] {
            let c = estimate_splitting_constant(&s, 4.0, eps, e.chi, 200, 8).unwrap().constant;
            for seed in 0..100u64 {
                let w = random_field(&s, 500 + seed, 1.0).unwrap();
                let w = w.scale((0.9 / phi(&w)).sqrt() * (seed as f64 + 1.0) / 100.0);
                let lhs = grad_psi_r(&w, 4.0).unwrap().l2_norm_sq();
                let rhs = eps * (grad_phi_norm_sq(&w) + w.l2_norm_sq()) + c * phi(&w).powf(e.chi);
                assert!(lhs <= rhs, "eps {eps} seed {seed}: {lhs} > {rhs}");
            }
        }
    }
}
