use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::evolution::{EvolutionParams, Forcing, Stepper};
use crate::field::ComplexField;
use crate::monotone::phi;

/// Step-size policy and decision rule of the blow-up detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupPolicy {
    /// Energy level `Theta` whose crossing counts as blow-up.
    pub threshold: f64,
    /// A step raising `phi` by more than this fraction is retried at `dt/2`.
    pub max_growth: f64,
    /// After a step raising `phi` by at most this fraction, `dt` doubles
    /// (up to the base step).
    pub regrow_below: f64,
    pub min_dt: f64,
    /// Relative change of the crossing time accepted as converged.
    pub stability: f64,
    /// Number of base-step halvings tried before giving up.
    pub max_refinements: usize,
}

impl Default for BlowupPolicy {
    fn default() -> Self {
        BlowupPolicy {
            threshold: 1e8,
            max_growth: 0.10,
            regrow_below: 0.025,
            min_dt: 1e-12,
            stability: 0.05,
            max_refinements: 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupOutcome {
    GlobalOnHorizon,
    Blowup,
    Inconclusive,
}

/// One adaptive run at a fixed base step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRun {
    pub base_dt: f64,
    /// Time at which `phi` crossed the threshold, if it did.
    pub crossing_time: Option<f64>,
    pub peak_phi: f64,
    pub steps: usize,
    pub smallest_dt: f64,
    /// The step size fell below the policy minimum.
    pub underflow: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub outcome: BlowupOutcome,
    /// Estimated maximal existence time.
    pub blowup_time: Option<f64>,
    pub peak_phi: f64,
    pub horizon: f64,
    pub threshold: f64,
    pub history: Vec<RefinementRun>,
    pub note: Option<String>,
}

fn adaptive_run(
    stepper: &mut Stepper,
    u0: &ComplexField,
    horizon: f64,
    base_dt: f64,
    policy: &BlowupPolicy,
) -> RefinementRun {
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut dt = base_dt;
    let mut energy = phi(&u);
    let mut run = RefinementRun {
        base_dt,
        crossing_time: None,
        peak_phi: energy,
        steps: 0,
        smallest_dt: base_dt,
        underflow: false,
    };
    if energy > policy.threshold {
        run.crossing_time = Some(0.0);
        return run;
    }
    while t < horizon * (1.0 - 1e-12) {
        let h = dt.min(horizon - t);
        let next = stepper.step(&u, t, h).ok().map(|v| {
            let e = phi(&v);
            (v, e)
        });
        let accepted = match &next {
            Some((_, e)) if e.is_finite() => *e <= energy * (1.0 + policy.max_growth) || energy == 0.0,
            _ => false,
        };
        if !accepted {
            dt *= 0.5;
            run.smallest_dt = run.smallest_dt.min(dt);
            if dt < policy.min_dt {
                run.underflow = true;
                return run;
            }
            continue;
        }
        let (v, e) = next.expect("accepted steps are finite");
        let growth = if energy > 0.0 { e / energy - 1.0 } else { 0.0 };
        run.steps += 1;
        run.peak_phi = run.peak_phi.max(e);
        if e > policy.threshold {
            // log-linear interpolation of the crossing inside the step
            let w = (policy.threshold.ln() - energy.ln()) / (e.ln() - energy.ln());
            run.crossing_time = Some(t + w.clamp(0.0, 1.0) * h);
            return run;
        }
        t += h;
        u = v;
        energy = e;
        if growth <= policy.regrow_below {
            dt = (2.0 * dt).min(base_dt);
        }
    }
    run
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Blow-up alternative as an operational test: integrate with an adaptive
/// step at base steps `params.dt, params.dt/2, ...` and call the run a
/// blow-up once two successive refinements move the threshold crossing by
/// less than `policy.stability`.
pub fn detect_blowup(
    params: &EvolutionParams,
    u0: &ComplexField,
    forcing: &Forcing,
    policy: &BlowupPolicy,
) -> Result<BlowupVerdict> {
    if !(policy.threshold > 0.0) || !(policy.max_growth > 0.0) || !(policy.min_dt > 0.0) {
        return Err(CglError::param("policy", "threshold, growth and minimum step must be positive"));
    }
    if !u0.is_finite() {
        return Err(CglError::param("u0", "initial state must be finite"));
    }
    forcing.validate(u0.space(), params.horizon)?;
    let mut stepper = Stepper::new(u0.space(), params, forcing)?;
    let mut history: Vec<RefinementRun> = Vec::new();
    let mut base = params.dt;
    let verdict = |outcome, blowup_time, history: Vec<RefinementRun>, note: Option<String>| {
        let peak = history.iter().map(|r| r.peak_phi).fold(0.0, f64::max);
        BlowupVerdict {
            outcome,
            blowup_time,
            peak_phi: peak,
            horizon: params.horizon,
            threshold: policy.threshold,
            history,
            note,
        }
    };
    for _ in 0..=policy.max_refinements + 1 {
        history.push(adaptive_run(&mut stepper, u0, params.horizon, base, policy));
        base *= 0.5;
        let n = history.len();
        if history[n - 1].underflow {
            return Ok(verdict(
                BlowupOutcome::Inconclusive,
                None,
                history,
                Some("step size underflow before the crossing time stabilized".into()),
            ));
        }
        if n < 3 {
            continue;
        }
        let last: Vec<Option<f64>> = history[n - 3..].iter().map(|r| r.crossing_time).collect();
        match (last[0], last[1], last[2]) {
            (Some(a), Some(b), Some(c)) => {
                if relative_change(a, b) < policy.stability && relative_change(b, c) < policy.stability {
                    return Ok(verdict(BlowupOutcome::Blowup, Some(c), history, None));
                }
            }
            (None, None, None) => return Ok(verdict(BlowupOutcome::GlobalOnHorizon, None, history, None)),
            _ => {}
        }
    }
    Ok(verdict(
        BlowupOutcome::Inconclusive,
        None,
        history,
        Some("threshold crossing did not stabilize under refinement".into()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Nonlinearity;
    use crate::spectral::{Domain, Space};
    use std::f64::consts::PI;

    fn space() -> Space {
        Space::new(Domain::interval(PI, 32).unwrap())
    }

    #[test]
    fn large_focusing_data_blows_up() {
        let s = space();
        let p = EvolutionParams {
            kappa: 5.0,
            dt: 1e-4,
            horizon: 1.0,
            ..Default::default()
        };
        let u0 = ComplexField::eigenmode(&s, [1, 0], 10.0);
        let v = detect_blowup(&p, &u0, &Forcing::Zero, &BlowupPolicy::default()).unwrap();
        assert_eq!(v.outcome, BlowupOutcome::Blowup, "{v:?}");
        let tm = v.blowup_time.unwrap();
        // first-mode ODE a' = -a + (15/4) a^3 from a = 10 blows up near
        // t = ln(1 / (1 - 1/(3.75 * 100))) / 2
        let ode = 0.5 * (1.0f64 / (1.0 - 1.0 / 375.0)).ln();
        assert!(tm < 1.0 && tm > 0.3 * ode && tm < 3.0 * ode, "{tm} vs {ode}");
    }

    #[test]
    fn small_data_is_global() {
        let s = space();
        let p = EvolutionParams {
            kappa: 5.0,
            dt: 1e-2,
            horizon: 10.0,
            ..Default::default()
        };
        let u0 = ComplexField::eigenmode(&s, [1, 0], 0.01);
        let v = detect_blowup(&p, &u0, &Forcing::Zero, &BlowupPolicy::default()).unwrap();
        assert_eq!(v.outcome, BlowupOutcome::GlobalOnHorizon);
        assert!(v.blowup_time.is_none());
    }

    #[test]
    fn defocusing_never_blows_up() {
        let s = space();
        for amp in [1.0, 10.0, 100.0] {
            let p = EvolutionParams {
                kappa: 5.0,
                dt: 1e-3,
                horizon: 0.2,
                nonlinearity: Nonlinearity::Defocusing,
                ..Default::default()
            };
            let u0 = ComplexField::eigenmode(&s, [1, 0], amp);
            let v = detect_blowup(&p, &u0, &Forcing::Zero, &BlowupPolicy::default()).unwrap();
            assert_eq!(v.outcome, BlowupOutcome::GlobalOnHorizon, "amplitude {amp}: {v:?}");
        }
    }
}
