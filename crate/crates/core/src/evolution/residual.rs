use super::stepper::{add_rotated, Stepper};
use super::{EvolutionParams, Forcing, ForcingModes, SourceSeries, Trajectory};
use crate::error::{CglError, Result};
use crate::field::{rotate, ModePair};

/// Per-sample L2 norm of
/// `(U_{j+1} - U_j)/dt + (lambda nu E + a(nu) I) U_{j+1} - gamma U_{j+1} - src_{j+1}`,
/// with zero at the first sample.
fn residual_series(
    traj: &Trajectory,
    params: &EvolutionParams,
    alpha_part: impl Fn(f64) -> f64,
    mut source: impl FnMut(usize, &ModePair) -> ModePair,
) -> Result<Vec<f64>> {
    if traj.len() < 2 {
        return Err(CglError::Precondition("residual needs at least two samples".into()));
    }
    let space = traj.space();
    let nu = space.eigenvalues();
    let weight = space.domain().mode_weight();
    let mut out = vec![0.0];
    let mut prev = traj.states[0].to_modes();
    for j in 1..traj.len() {
        let cur = traj.states[j].to_modes();
        let dt = traj.times[j] - traj.times[j - 1];
        let src = source(j, &cur);
        let mut acc = 0.0;
        for k in 0..nu.len() {
            let (l1, l2) = rotate(params.lambda * nu[k] - params.gamma, alpha_part(nu[k]), cur.c1[k], cur.c2[k]);
            let r1 = (cur.c1[k] - prev.c1[k]) / dt + l1 - src.c1[k];
            let r2 = (cur.c2[k] - prev.c2[k]) / dt + l2 - src.c2[k];
            acc += r1 * r1 + r2 * r2;
        }
        out.push((weight * acc).sqrt());
        prev = cur;
    }
    Ok(out)
}

fn source_from_h<'a>(
    h: &'a SourceSeries,
    forcing: &Forcing,
    traj: &'a Trajectory,
    params: &EvolutionParams,
) -> impl FnMut(usize, &ModePair) -> ModePair + 'a {
    let fm = ForcingModes::new(forcing);
    let (ka, be) = params.nonlinear_coeffs();
    move |j, cur| {
        let t = traj.times[j];
        let mut src = ModePair::zeros(cur.c1.len());
        add_rotated(ka, be, &h.at(t).to_modes(), &mut src);
        fm.add_to(t, &mut src.c1, &mut src.c2);
        src
    }
}

/// Backward-difference residual of (ACGL) along a trajectory, evaluated at
/// each `t_{j+1}`.
pub fn acgl_residual(traj: &Trajectory, forcing: &Forcing, params: &EvolutionParams) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(CglError::Precondition("residual needs at least two samples".into()));
    }
    let mut stepper = Stepper::new(traj.space(), params, forcing)?;
    let alpha = params.alpha;
    residual_series(traj, params, |nu| alpha * nu, |j, cur| {
        stepper.explicit_source(cur, Some(&traj.states[j]), traj.times[j])
    })
}

/// Backward-difference residual of the linear auxiliary equation with
/// source `h`.
pub fn aeh_residual(
    traj: &Trajectory,
    h: &SourceSeries,
    forcing: &Forcing,
    params: &EvolutionParams,
) -> Result<Vec<f64>> {
    let alpha = params.alpha;
    residual_series(traj, params, |nu| alpha * nu, source_from_h(h, forcing, traj, params))
}

pub(crate) fn aeh_mu_residual(
    traj: &Trajectory,
    h: &SourceSeries,
    forcing: &Forcing,
    mu: f64,
    params: &EvolutionParams,
) -> Result<Vec<f64>> {
    let alpha = params.alpha;
    residual_series(
        traj,
        params,
        |nu| alpha * nu / (1.0 + mu * nu),
        source_from_h(h, forcing, traj, params),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::integrate_acgl;
    use crate::field::ComplexField;
    use crate::spectral::{Domain, Space};
    use std::f64::consts::PI;

    #[test]
    fn residual_is_first_order() {
        let s = Space::new(Domain::interval(PI, 32).unwrap());
        let u0 = ComplexField::sample(&s, |x| (x[0].sin(), 0.3 * (3.0 * x[0]).sin()));
        let f = ComplexField::sample(&s, |x| (0.1 * x[0].sin(), 0.0));
        let base = EvolutionParams {
            alpha: 0.7,
            beta: 0.5,
            gamma: 0.2,
            horizon: 0.25,
            ..Default::default()
        };
        let mut maxes = Vec::new();
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let p = EvolutionParams { dt, ..base.clone() };
            let traj = integrate_acgl(&u0, &Forcing::Constant(f.clone()), &p).unwrap();
            maxes.push(traj.residuals().iter().cloned().fold(0.0, f64::max));
        }
        for w in maxes.windows(2) {
            assert!((w[0] / w[1]).log2() >= 0.9, "{maxes:?}");
        }
    }

    #[test]
    fn too_short_trajectory_is_rejected() {
        let s = Space::new(Domain::interval(PI, 8).unwrap());
        let traj = Trajectory {
            times: vec![0.0],
            states: vec![ComplexField::zeros(&s)],
            diagnostics: vec![],
            blowup_index: None,
        };
        assert!(acgl_residual(&traj, &Forcing::Zero, &EvolutionParams::default()).is_err());
    }
}
