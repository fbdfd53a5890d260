use super::stepper::{add_rotated, Kernel};
use super::{time_grid, EvolutionParams, Forcing, ForcingModes, SourceSeries, StepDiagnostics, Trajectory};
use crate::error::{CglError, Result};
use crate::field::{ComplexField, ModePair};

fn check_inputs(h: &SourceSeries, forcing: &Forcing, u0: &ComplexField, horizon: f64, params: &EvolutionParams) -> Result<()> {
    let space = u0.space();
    params.validate(space.domain().dim())?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CglError::param("horizon", format!("must be positive, got {horizon}")));
    }
    if h.fields()[0].space() != space {
        return Err(CglError::DomainMismatch);
    }
    if h.times()[0] > 0.0 || h.horizon() < horizon * (1.0 - 1e-12) {
        return Err(CglError::param(
            "source",
            format!("samples cover [{}, {}], need [0, {horizon}]", h.times()[0], h.horizon()),
        ));
    }
    forcing.validate(space, horizon)?;
    if !u0.is_finite() {
        return Err(CglError::param("u0", "initial state must be finite"));
    }
    Ok(())
}

fn run_linear(
    kernel: Kernel,
    h: &SourceSeries,
    forcing: &Forcing,
    u0: &ComplexField,
    horizon: f64,
    params: &EvolutionParams,
) -> Result<Trajectory> {
    let space = u0.space();
    let nu = space.eigenvalues();
    let fm = ForcingModes::new(forcing);
    let (ka, be) = params.nonlinear_coeffs();
    let times = time_grid(horizon, params.dt);
    let mut states = Vec::with_capacity(times.len());
    states.push(u0.clone());
    let mut m = u0.to_modes();
    for w in times.windows(2) {
        let hm = h.at(w[0]).to_modes();
        let mut src = ModePair::zeros(nu.len());
        add_rotated(ka, be, &hm, &mut src);
        fm.add_to(w[0], &mut src.c1, &mut src.c2);
        m = kernel.implicit_update(nu, &m, &src, w[1] - w[0]);
        states.push(ComplexField::from_modes(space, &m));
    }
    let mut traj = Trajectory {
        diagnostics: states.iter().map(|u| StepDiagnostics::of(u, params.q)).collect(),
        times,
        states,
        blowup_index: None,
    };
    let res = super::aeh_residual(&traj, h, forcing, params)?;
    for (d, r) in traj.diagnostics.iter_mut().zip(res) {
        d.residual = r;
    }
    Ok(traj)
}

/// Integrates the linear auxiliary equation
/// `dU/dt + (lambda + alpha I) dphi(U) - (kappa + beta I) h - gamma U = F`
/// on `[0, horizon]` with step `params.dt`. The source is taken at the left
/// end of each step, so with `h = dpsi_q(U)` sampled on the step grid the
/// result coincides with the semi-implicit (ACGL) trajectory.
pub fn solve_linear_aeh(
    h: &SourceSeries,
    forcing: &Forcing,
    u0: &ComplexField,
    horizon: f64,
    params: &EvolutionParams,
) -> Result<Trajectory> {
    check_inputs(h, forcing, u0, horizon, params)?;
    let kernel = Kernel {
        lambda: params.lambda,
        alpha: params.alpha,
        gamma: params.gamma,
        yosida: None,
    };
    run_linear(kernel, h, forcing, u0, horizon, params)
}

/// Linear auxiliary equation with `alpha I dphi` replaced by its Yosida
/// approximation `alpha I dphi_mu`, which is stepped explicitly while
/// `lambda dphi` stays implicit. Requires `dt <= mu / (4 |alpha|)`.
pub fn solve_aeh_mu(
    h: &SourceSeries,
    forcing: &Forcing,
    u0: &ComplexField,
    horizon: f64,
    mu: f64,
    params: &EvolutionParams,
) -> Result<Trajectory> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(CglError::param("mu", format!("must be positive, got {mu}")));
    }
    check_inputs(h, forcing, u0, horizon, params)?;
    if params.alpha != 0.0 {
        let bound = mu / (4.0 * params.alpha.abs());
        if params.dt > bound {
            return Err(CglError::StepTooLarge { dt: params.dt, bound });
        }
    }
    let kernel = Kernel {
        lambda: params.lambda,
        alpha: 0.0,
        gamma: params.gamma,
        yosida: Some((params.alpha, mu)),
    };
    let mut traj = run_linear(kernel, h, forcing, u0, horizon, params)?;
    // the stored residual is that of the regularized equation
    let res = super::residual::aeh_mu_residual(&traj, h, forcing, mu, params)?;
    for (d, r) in traj.diagnostics.iter_mut().zip(res) {
        d.residual = r;
    }
    Ok(traj)
}
