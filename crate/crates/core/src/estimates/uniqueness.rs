use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::evolution::{EvolutionParams, Trajectory};
use crate::monotone::phi;

/// Continuous-dependence check for two runs with identical parameters.
///
/// `C` is the smallest constant for which the discrete form of
/// `d/dt |W|^2/2 + lambda phi(W) <= [C (psi_q(U)^{q-2} + psi_q(V)^{q-2})^{1/eta} + gamma+] |W|^2`
/// holds at every step; the envelope is
/// `|W(t)|^2 <= |W(0)|^2 exp(2 [C (2 M^{q-2})^{1/eta} + gamma+] t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `sup psi_q` over both runs.
    pub m_sup: f64,
    pub eta: f64,
    pub c_measured: f64,
    /// Exponential rate of the envelope.
    pub rate: f64,
    pub times: Vec<f64>,
    pub diff_sq: Vec<f64>,
    pub envelope: Vec<f64>,
    pub holds: bool,
    pub violations: Vec<usize>,
    /// `max_{t > 0} |W|^2 / envelope`.
    pub max_ratio: f64,
}

impl UniquenessReport {
    /// `|W(t)|^2 / envelope(t)` at the sample nearest `t`.
    pub fn ratio_at(&self, t: f64) -> f64 {
        let j = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(j, _)| j)
            .unwrap_or(0);
        if self.envelope[j] > 0.0 {
            self.diff_sq[j] / self.envelope[j]
        } else {
            0.0
        }
    }
}

pub fn uniqueness_envelope(a: &Trajectory, b: &Trajectory, params: &EvolutionParams, eta: f64) -> Result<UniquenessReport> {
    if a.times != b.times {
        return Err(CglError::ConfigMismatch("trajectories use different time grids".into()));
    }
    if a.space() != b.space() {
        return Err(CglError::DomainMismatch);
    }
    if a.blowup_index.is_some() || b.blowup_index.is_some() {
        return Err(CglError::Precondition("both runs must cover the horizon".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(CglError::param("eta", format!("must lie in (0, 1], got {eta}")));
    }
    let q = params.q;
    let n = a.len();
    let psi_a: Vec<f64> = a.diagnostics.iter().map(|d| d.psi_q).collect();
    let psi_b: Vec<f64> = b.diagnostics.iter().map(|d| d.psi_q).collect();
    let m_sup = psi_a.iter().chain(&psi_b).cloned().fold(0.0, f64::max);
    let w: Vec<_> = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(u, v)| u.sub(v))
        .collect::<Result<_>>()?;
    let diff_sq: Vec<f64> = w.iter().map(|x| x.l2_norm_sq()).collect();
    let gp = params.gamma_plus();

    let mut c: f64 = 0.0;
    for j in 0..n - 1 {
        let dt = a.times[j + 1] - a.times[j];
        let lhs = (diff_sq[j + 1] - diff_sq[j]) / (2.0 * dt) + params.lambda * phi(&w[j + 1]);
        let excess = lhs - gp * diff_sq[j];
        if excess <= 0.0 {
            continue;
        }
        let g = (psi_a[j].powf(q - 2.0) + psi_b[j].powf(q - 2.0)).powf(1.0 / eta);
        c = c.max(if g > 0.0 && diff_sq[j] > 0.0 {
            excess / (g * diff_sq[j])
        } else {
            f64::INFINITY
        });
    }
    let rate = 2.0 * (c * (2.0 * m_sup.powf(q - 2.0)).powf(1.0 / eta) + gp);
    let envelope: Vec<f64> = a.times.iter().map(|&t| diff_sq[0] * (rate * t).exp()).collect();
    let mut violations = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for j in 1..n {
        if !(diff_sq[j] <= envelope[j] * (1.0 + 1e-9)) {
            violations.push(j);
        }
        if envelope[j] > 0.0 {
            max_ratio = max_ratio.max(diff_sq[j] / envelope[j]);
        }
    }
    Ok(UniquenessReport {
        m_sup,
        eta,
        c_measured: c,
        rate,
        times: a.times.clone(),
        diff_sq,
        envelope,
        holds: violations.is_empty(),
        violations,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::gns_exponents;
    use crate::evolution::{integrate_acgl, Forcing};
    use crate::field::ComplexField;
    use crate::spectral::{Domain, Space};
    use std::f64::consts::PI;

    fn runs(gamma: f64) -> (Trajectory, Trajectory, EvolutionParams) {
        let s = Space::new(Domain::interval(PI, 32).unwrap());
        let p = EvolutionParams {
            alpha: 0.5,
            beta: 0.5,
            gamma,
            dt: 1e-2,
            horizon: 1.0,
            ..Default::default()
        };
        let u0 = ComplexField::sample(&s, |x| (0.5 * x[0].sin(), 0.2 * (2.0 * x[0]).sin()));
        let v0 = u0.add(&ComplexField::eigenmode(&s, [2, 0], 1e-6)).unwrap();
        let a = integrate_acgl(&u0, &Forcing::Zero, &p).unwrap();
        let b = integrate_acgl(&v0, &Forcing::Zero, &p).unwrap();
        (a, b, p)
    }

    #[test]
    fn identical_runs_have_zero_difference() {
        let (a, _, p) = runs(0.0);
        let eta = gns_exponents(p.q, 1).unwrap().eta;
        let rep = uniqueness_envelope(&a, &a, &p, eta).unwrap();
        assert!(rep.diff_sq.iter().all(|&d| d == 0.0));
        assert!(rep.holds);
    }

    #[test]
    fn perturbed_runs_respect_envelope() {
        let (a, b, p) = runs(0.0);
        let eta = gns_exponents(p.q, 1).unwrap().eta;
        let rep = uniqueness_envelope(&a, &b, &p, eta).unwrap();
        assert!(rep.holds, "{:?}", rep.violations);
        assert!(rep.ratio_at(1.0) <= 0.9);
    }

    #[test]
    fn gamma_enters_rate_linearly() {
        let (a, b, p) = runs(0.0);
        let eta = gns_exponents(p.q, 1).unwrap().eta;
        let base = uniqueness_envelope(&a, &b, &p, eta).unwrap();
        let shifted = EvolutionParams { gamma: 0.7, ..p };
        let rep = uniqueness_envelope(&a, &b, &shifted, eta).unwrap();
        assert!(rep.rate >= base.rate);
        assert!(rep.c_measured <= base.c_measured);
        assert!(rep.holds);
    }
}
