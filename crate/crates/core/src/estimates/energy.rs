use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::evolution::{EvolutionParams, Forcing, SourceSeries, Trajectory};
use crate::field::ModePair;

/// Discrete energy balance of a linear auxiliary trajectory.
///
/// Residuals are forward differences at each `t_j`. Time integrals of state
/// quantities use right endpoints and those of sources left endpoints,
/// matching the implicit/explicit split of the stepper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `d/dt |U|^2/2 + 2 lambda phi - gamma |U|^2 - ((kappa + beta I) h + F, U)`.
    pub first_residuals: Vec<f64>,
    /// `d/dt phi + lambda |dphi|^2 - 2 gamma phi - ((kappa + beta I) h + F, dphi)`.
    pub second_residuals: Vec<f64>,
    pub max_first: f64,
    pub max_second: f64,
    pub horizon: f64,
    pub radius: f64,
    /// `max(R, ||h||^2)`, the scale multiplying `C1` and `C2`.
    pub effective_radius: f64,
    pub c1: f64,
    pub c2: f64,
    pub sup_l2_sq: f64,
    pub int_phi: f64,
    pub sup_phi: f64,
    pub int_grad_phi_sq: f64,
    pub int_dudt_sq: f64,
    /// Running `sup |U|^2 + int phi <= C1 R` per sample.
    pub first_envelope: Vec<bool>,
    /// Running `sup phi + int |dphi|^2 + int |U'|^2 <= C2 R` per sample.
    pub second_envelope: Vec<bool>,
    /// `|U|^2/2 + 2 lambda int phi <= (|U0|^2 + ||h||^2 + ||F||^2)/2 * e^{(2(g+ + k^2 + b^2) + 1) t}`.
    pub gronwall_envelope: Vec<bool>,
}

impl EnergyReport {
    pub fn envelopes_hold(&self) -> bool {
        self.first_envelope.iter().all(|&b| b)
            && self.second_envelope.iter().all(|&b| b)
            && self.gronwall_envelope.iter().all(|&b| b)
    }
}

fn inner_modes(weight: f64, a: &ModePair, b: &ModePair) -> f64 {
    let s: f64 = (0..a.c1.len()).map(|k| a.c1[k] * b.c1[k] + a.c2[k] * b.c2[k]).sum();
    weight * s
}

/// `C1 = 8 e^{(4 gamma+ + kappa^2 + beta^2 + lambda) S / 2} / min(1, 4 lambda)`.
pub fn first_energy_constant(params: &EvolutionParams, horizon: f64) -> f64 {
    let a = 4.0 * params.gamma_plus() + params.kappa.powi(2) + params.beta.powi(2) + params.lambda;
    8.0 * (0.5 * a * horizon).exp() / (4.0 * params.lambda).min(1.0)
}

/// `C2` such that `sup phi + int |dphi|^2 + int |U'|^2 <= C2 R`.
pub fn second_energy_constant(params: &EvolutionParams, horizon: f64) -> f64 {
    let p = params;
    let kb = p.kappa.powi(2) + p.beta.powi(2);
    let c1 = first_energy_constant(p, horizon);
    let b = 1.0 + kb / p.lambda + 2.0 * p.gamma_plus() * c1;
    let grad = 4.0 * b / p.lambda;
    let dudt = 4.0
        * ((p.lambda.powi(2) + p.alpha.powi(2)) * grad + kb + p.gamma.powi(2) * horizon * c1 + p.lambda);
    b + grad + dudt
}

pub fn energy_identity_report(
    traj: &Trajectory,
    h: &SourceSeries,
    forcing: &Forcing,
    params: &EvolutionParams,
) -> Result<EnergyReport> {
    let n = traj.len();
    if n < 2 {
        return Err(CglError::Precondition("energy report needs at least two samples".into()));
    }
    if traj.blowup_index.is_some() {
        return Err(CglError::Precondition("trajectory ended in blow-up".into()));
    }
    let space = traj.space();
    let nu = space.eigenvalues();
    let weight = space.domain().mode_weight();
    let p = params;
    let (ka, be) = p.nonlinear_coeffs();
    let horizon = traj.times[n - 1];

    let modes: Vec<ModePair> = traj.states.iter().map(|u| u.to_modes()).collect();
    let l2: Vec<f64> = modes.iter().map(|m| inner_modes(weight, m, m)).collect();
    let grad: Vec<ModePair> = modes
        .iter()
        .map(|m| ModePair {
            c1: m.c1.iter().zip(nu).map(|(c, v)| c * v).collect(),
            c2: m.c2.iter().zip(nu).map(|(c, v)| c * v).collect(),
        })
        .collect();
    let phis: Vec<f64> = modes.iter().zip(&grad).map(|(m, g)| 0.5 * inner_modes(weight, m, g)).collect();
    let grad_sq: Vec<f64> = grad.iter().map(|g| inner_modes(weight, g, g)).collect();
    let h_sq: Vec<f64> = traj.times.iter().map(|&t| h.at(t).l2_norm_sq()).collect();
    let f_sq: Vec<f64> = traj.times.iter().map(|&t| forcing.at(space, t).l2_norm_sq()).collect();

    let mut first_residuals = Vec::with_capacity(n - 1);
    let mut second_residuals = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let dt = traj.times[j + 1] - traj.times[j];
        let t = traj.times[j];
        let hm = h.at(t).to_modes();
        let fm = forcing.at(space, t).to_modes();
        let mut src = ModePair::zeros(nu.len());
        for k in 0..nu.len() {
            // (ka E + be I) h + F with I(x1, x2) = (x2, -x1)
            src.c1[k] = ka * hm.c1[k] + be * hm.c2[k] + fm.c1[k];
            src.c2[k] = ka * hm.c2[k] - be * hm.c1[k] + fm.c2[k];
        }
        let r1 = (0.5 * l2[j + 1] - 0.5 * l2[j]) / dt + 2.0 * p.lambda * phis[j]
            - p.gamma * l2[j]
            - inner_modes(weight, &src, &modes[j]);
        let r2 = (phis[j + 1] - phis[j]) / dt + p.lambda * grad_sq[j]
            - 2.0 * p.gamma * phis[j]
            - inner_modes(weight, &src, &grad[j]);
        first_residuals.push(r1.abs());
        second_residuals.push(r2.abs());
    }

    let r_ball = (0.5 * l2[0] + phis[0] + left_sum(&traj.times, &f_sq) / p.lambda).max(1.0);
    let h_norm_sq = left_sum(&traj.times, &h_sq);
    let r_env = r_ball.max(h_norm_sq);
    let c1 = first_energy_constant(p, horizon);
    let c2 = second_energy_constant(p, horizon);
    let growth = 2.0 * (p.gamma_plus() + p.kappa.powi(2) + p.beta.powi(2)) + 1.0;

    let slack = 1.0 + 1e-9;
    let mut first_envelope = vec![true; n];
    let mut second_envelope = vec![true; n];
    let mut gronwall_envelope = vec![true; n];
    let (mut sup_l2, mut int_phi, mut sup_phi, mut int_grad, mut int_dudt) = (l2[0], 0.0, phis[0], 0.0, 0.0);
    let (mut run_h, mut run_f) = (0.0, 0.0);
    for j in 0..n {
        if j > 0 {
            let dt = traj.times[j] - traj.times[j - 1];
            sup_l2 = sup_l2.max(l2[j]);
            sup_phi = sup_phi.max(phis[j]);
            int_phi += dt * phis[j];
            int_grad += dt * grad_sq[j];
            int_dudt += traj.states[j].sub(&traj.states[j - 1])?.l2_norm_sq() / dt;
            run_h += dt * h_sq[j - 1];
            run_f += dt * f_sq[j - 1];
        }
        first_envelope[j] = sup_l2 + int_phi <= c1 * r_env * slack;
        second_envelope[j] = sup_phi + int_grad + int_dudt <= c2 * r_env * slack;
        let t = traj.times[j];
        let lhs = 0.5 * l2[j] + 2.0 * p.lambda * int_phi;
        gronwall_envelope[j] = lhs <= 0.5 * (l2[0] + run_h + run_f) * (growth * t).exp() * slack;
    }

    let max_of = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    Ok(EnergyReport {
        max_first: max_of(&first_residuals),
        max_second: max_of(&second_residuals),
        first_residuals,
        second_residuals,
        horizon,
        radius: r_ball,
        effective_radius: r_env,
        c1,
        c2,
        sup_l2_sq: sup_l2,
        int_phi,
        sup_phi,
        int_grad_phi_sq: int_grad,
        int_dudt_sq: int_dudt,
        first_envelope,
        second_envelope,
        gronwall_envelope,
    })
}

/// `sum_j (t_{j+1} - t_j) v_j`.
fn left_sum(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values).map(|(t, v)| (t[1] - t[0]) * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{solve_linear_aeh, time_grid};
    use crate::field::ComplexField;
    use crate::spectral::{Domain, Space};
    use std::f64::consts::PI;

    fn setup() -> (Space, ComplexField, SourceSeries, Forcing) {
        let s = Space::new(Domain::interval(PI, 32).unwrap());
        let u0 = ComplexField::sample(&s, |x| (x[0].sin(), 0.4 * (2.0 * x[0]).sin()));
        let times = time_grid(1.0, 0.05);
        let fields = times
            .iter()
            .map(|&t| ComplexField::sample(&s, |x| ((1.0 + t) * (3.0 * x[0]).sin(), (t * 2.0).cos() * x[0].sin())))
            .collect();
        let h = SourceSeries::new(times, fields).unwrap();
        let f = ComplexField::sample(&s, |x| (0.2 * x[0].sin(), -0.1 * (2.0 * x[0]).sin()));
        (s, u0, h, Forcing::Constant(f))
    }

    #[test]
    fn residuals_are_first_order_and_envelopes_hold() {
        let (_, u0, h, f) = setup();
        let mut maxes = Vec::new();
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let p = EvolutionParams {
                alpha: 0.8,
                beta: 0.4,
                gamma: 0.3,
                dt,
                ..Default::default()
            };
            let traj = solve_linear_aeh(&h, &f, &u0, 1.0, &p).unwrap();
            let rep = energy_identity_report(&traj, &h, &f, &p).unwrap();
            assert!(rep.envelopes_hold());
            maxes.push((rep.max_first, rep.max_second));
        }
        for w in maxes.windows(2) {
            assert!((w[0].0 / w[1].0).log2() >= 0.9, "{maxes:?}");
            assert!((w[0].1 / w[1].1).log2() >= 0.9, "{maxes:?}");
        }
    }

    #[test]
    fn pure_decay_dissipates() {
        let s = Space::new(Domain::interval(PI, 16).unwrap());
        let u0 = ComplexField::eigenmode(&s, [1, 0], 1.0);
        let p = EvolutionParams {
            dt: 1e-3,
            ..Default::default()
        };
        let h = SourceSeries::zero(&s, &[0.0, 2.0]);
        let traj = solve_linear_aeh(&h, &Forcing::Zero, &u0, 2.0, &p).unwrap();
        let rep = energy_identity_report(&traj, &h, &Forcing::Zero, &p).unwrap();
        // int_0^inf phi(e^{-t} sin) dt = (pi/4) / 2
        assert!(rep.int_phi <= PI / 8.0);
        assert!((rep.int_phi - PI / 8.0 * (1.0 - (-4.0f64).exp())).abs() < 1e-3);
        assert!(rep.envelopes_hold());
    }

    #[test]
    fn constants_match_hand_evaluation() {
        let p = EvolutionParams {
            lambda: 0.5,
            kappa: 1.0,
            beta: 1.0,
            gamma: -1.0,
            ..Default::default()
        };
        let c1 = first_energy_constant(&p, 2.0);
        assert!((c1 - 8.0 * (2.5f64).exp()).abs() < 1e-12 * c1);
    }
}
