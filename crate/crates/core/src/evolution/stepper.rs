use super::{time_grid, EvolutionParams, Forcing, ForcingModes, Scheme, StepDiagnostics, Trajectory};
use crate::error::{CglError, Result};
use crate::field::{rotate, ComplexField, ModePair};
use crate::monotone::grad_psi_pointwise;
use crate::spectral::Space;

/// Coefficients of the mode-wise implicit solve
/// `(E + dt nu (lambda E + alpha I)) x' = x + dt (src + gamma x - alpha I nu_mu x)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Kernel {
    pub lambda: f64,
    /// `alpha` in the implicit block.
    pub alpha: f64,
    pub gamma: f64,
    /// `(alpha, mu)` for an explicit `alpha I dphi_mu` term.
    pub yosida: Option<(f64, f64)>,
}

impl Kernel {
    pub(crate) fn implicit_update(&self, nu: &[f64], m: &ModePair, src: &ModePair, dt: f64) -> ModePair {
        let len = nu.len();
        let mut out = ModePair::zeros(len);
        for k in 0..len {
            let (x1, x2) = (m.c1[k], m.c2[k]);
            let mut r1 = x1 + dt * (src.c1[k] + self.gamma * x1);
            let mut r2 = x2 + dt * (src.c2[k] + self.gamma * x2);
            if let Some((alpha, mu)) = self.yosida {
                let w = alpha * nu[k] / (1.0 + mu * nu[k]);
                // I(x1, x2) = (x2, -x1)
                r1 -= dt * w * x2;
                r2 += dt * w * x1;
            }
            let a = 1.0 + dt * self.lambda * nu[k];
            let b = dt * self.alpha * nu[k];
            let det = a * a + b * b;
            let (y1, y2) = rotate(a, -b, r1, r2);
            out.c1[k] = y1 / det;
            out.c2[k] = y2 / det;
        }
        out
    }
}

/// `(a E + b I) src` added into `out`.
pub(crate) fn add_rotated(a: f64, b: f64, src: &ModePair, out: &mut ModePair) {
    for k in 0..out.c1.len() {
        let (y1, y2) = rotate(a, b, src.c1[k], src.c2[k]);
        out.c1[k] += y1;
        out.c2[k] += y2;
    }
}

pub(crate) fn modes_finite(m: &ModePair) -> bool {
    m.c1.iter().chain(&m.c2).all(|x| x.is_finite())
}

/// Reusable integrator for (ACGL) on one space with fixed parameters and
/// forcing. Steps may use any `dt`; `params.dt` is only the default.
pub struct Stepper {
    space: Space,
    params: EvolutionParams,
    forcing: ForcingModes,
    kernel: Kernel,
    g1: Vec<f64>,
    g2: Vec<f64>,
    n1: Vec<f64>,
    n2: Vec<f64>,
}

impl Stepper {
    pub fn new(space: &Space, params: &EvolutionParams, forcing: &Forcing) -> Result<Self> {
        params.validate(space.domain().dim())?;
        forcing.validate(space, 0.0)?;
        let n = space.len();
        Ok(Stepper {
            space: space.clone(),
            params: params.clone(),
            forcing: ForcingModes::new(forcing),
            kernel: Kernel {
                lambda: params.lambda,
                alpha: params.alpha,
                gamma: params.gamma,
                yosida: None,
            },
            g1: vec![0.0; n],
            g2: vec![0.0; n],
            n1: vec![0.0; n],
            n2: vec![0.0; n],
        })
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// Modes of `dpsi_q(U)` for `U` given in modes.
    pub(crate) fn nonlinear_modes(&mut self, m: &ModePair) -> ModePair {
        let s = &self.space;
        s.inverse(&m.c1, &mut self.g1);
        s.inverse(&m.c2, &mut self.g2);
        grad_psi_pointwise(&self.g1, &self.g2, self.params.q, &mut self.n1, &mut self.n2);
        self.forward_nonlinear()
    }

    fn nonlinear_from_grid(&mut self, u: &ComplexField) -> ModePair {
        grad_psi_pointwise(u.u1(), u.u2(), self.params.q, &mut self.n1, &mut self.n2);
        self.forward_nonlinear()
    }

    fn forward_nonlinear(&mut self) -> ModePair {
        let s = &self.space;
        let mut out = ModePair::zeros(s.len());
        s.forward(&self.n1, &mut out.c1);
        s.forward(&self.n2, &mut out.c2);
        out
    }

    /// Explicit sources `s(kappa + beta I) dpsi_q(U) + F(t)` in modes. When
    /// the grid values of `U` are at hand they are used as given.
    pub(crate) fn explicit_source(&mut self, m: &ModePair, grid: Option<&ComplexField>, t: f64) -> ModePair {
        let nl = match grid {
            Some(u) => self.nonlinear_from_grid(u),
            None => self.nonlinear_modes(m),
        };
        let (ka, be) = self.params.nonlinear_coeffs();
        let mut src = ModePair::zeros(m.c1.len());
        add_rotated(ka, be, &nl, &mut src);
        self.forcing.add_to(t, &mut src.c1, &mut src.c2);
        src
    }

    /// Full right-hand side `dU/dt` in modes.
    fn rhs(&mut self, m: &ModePair, t: f64) -> ModePair {
        let mut out = self.explicit_source(m, None, t);
        let p = &self.params;
        let nu = self.space.eigenvalues();
        for k in 0..nu.len() {
            let (l1, l2) = rotate(-p.lambda * nu[k] + p.gamma, -p.alpha * nu[k], m.c1[k], m.c2[k]);
            out.c1[k] += l1;
            out.c2[k] += l2;
        }
        out
    }

    pub(crate) fn step_modes(&mut self, m: &ModePair, grid: Option<&ComplexField>, t: f64, dt: f64) -> ModePair {
        match self.params.scheme {
            Scheme::SemiImplicit => {
                let src = self.explicit_source(m, grid, t);
                let kernel = self.kernel;
                kernel.implicit_update(self.space.eigenvalues(), m, &src, dt)
            }
            Scheme::ExplicitRk4 => {
                let stage = |base: &ModePair, k: &ModePair, s: f64| {
                    let mut out = base.clone();
                    for i in 0..out.c1.len() {
                        out.c1[i] += s * k.c1[i];
                        out.c2[i] += s * k.c2[i];
                    }
                    out
                };
                let k1 = self.rhs(m, t);
                let k2 = self.rhs(&stage(m, &k1, 0.5 * dt), t + 0.5 * dt);
                let k3 = self.rhs(&stage(m, &k2, 0.5 * dt), t + 0.5 * dt);
                let k4 = self.rhs(&stage(m, &k3, dt), t + dt);
                let mut out = m.clone();
                for i in 0..out.c1.len() {
                    out.c1[i] += dt / 6.0 * (k1.c1[i] + 2.0 * k2.c1[i] + 2.0 * k3.c1[i] + k4.c1[i]);
                    out.c2[i] += dt / 6.0 * (k1.c2[i] + 2.0 * k2.c2[i] + 2.0 * k3.c2[i] + k4.c2[i]);
                }
                out
            }
        }
    }

    /// Advances `u` from `t` to `t + dt`.
    pub fn step(&mut self, u: &ComplexField, t: f64, dt: f64) -> Result<ComplexField> {
        if u.space() != &self.space {
            return Err(CglError::DomainMismatch);
        }
        if !(dt > 0.0) {
            return Err(CglError::param("dt", format!("must be positive, got {dt}")));
        }
        let next = self.step_modes(&u.to_modes(), Some(u), t, dt);
        if !modes_finite(&next) {
            return Err(CglError::Blowup { step: 0, time: t + dt });
        }
        Ok(ComplexField::from_modes(&self.space, &next))
    }
}

/// One step of size `params.dt` from time `t`.
pub fn step_acgl(u: &ComplexField, t: f64, params: &EvolutionParams, forcing: &Forcing) -> Result<ComplexField> {
    Stepper::new(u.space(), params, forcing)?.step(u, t, params.dt)
}

/// Integrates (ACGL) on `[0, params.horizon]`.
///
/// A non-finite state ends the run early; the returned trajectory then holds
/// the finite prefix and `blowup_index` names the first failed sample.
pub fn integrate_acgl(u0: &ComplexField, forcing: &Forcing, params: &EvolutionParams) -> Result<Trajectory> {
    let space = u0.space();
    forcing.validate(space, params.horizon)?;
    if !u0.is_finite() {
        return Err(CglError::param("u0", "initial state must be finite"));
    }
    let mut stepper = Stepper::new(space, params, forcing)?;
    let grid = time_grid(params.horizon, params.dt);
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut m = u0.to_modes();
    let mut blowup_index = None;
    for (j, w) in grid.windows(2).enumerate() {
        let next = stepper.step_modes(&m, states.last(), w[0], w[1] - w[0]);
        if !modes_finite(&next) {
            blowup_index = Some(j + 1);
            break;
        }
        let u = ComplexField::from_modes(space, &next);
        if !u.is_finite() || !StepDiagnostics::of(&u, params.q).is_finite() {
            blowup_index = Some(j + 1);
            break;
        }
        times.push(w[1]);
        states.push(u);
        m = next;
    }
    let mut traj = Trajectory {
        diagnostics: states.iter().map(|u| StepDiagnostics::of(u, params.q)).collect(),
        times,
        states,
        blowup_index,
    };
    if traj.len() >= 2 {
        let res = super::acgl_residual(&traj, forcing, params)?;
        for (d, r) in traj.diagnostics.iter_mut().zip(res) {
            d.residual = r;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_field;
    use crate::spectral::Domain;
    use std::f64::consts::PI;

    fn space(n: usize) -> Space {
        Space::new(Domain::interval(PI, n).unwrap())
    }

    #[test]
    fn linear_step_on_eigenmode() {
        let s = space(32);
        let u = ComplexField::eigenmode(&s, [1, 0], 1.0);
        let p = EvolutionParams {
            kappa: 0.0,
            dt: 0.1,
            ..Default::default()
        };
        let v = step_acgl(&u, 0.0, &p, &Forcing::Zero).unwrap();
        let m = v.to_modes();
        assert!((m.c1[0] - 1.0 / 1.1).abs() < 1e-14);
        assert!(m.c1[1..].iter().all(|x| x.abs() < 1e-14));
        assert!(m.c2.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn linear_case_is_exact_power() {
        let s = space(16);
        let u = ComplexField::eigenmode(&s, [3, 0], 1.0);
        let p = EvolutionParams {
            kappa: 0.0,
            dt: 0.01,
            horizon: 0.1,
            ..Default::default()
        };
        let traj = integrate_acgl(&u, &Forcing::Zero, &p).unwrap();
        for (j, st) in traj.states.iter().enumerate() {
            let expect = (1.0 + 0.01 * 9.0f64).powi(-(j as i32));
            assert!((st.to_modes().c1[2] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_solve_contracts() {
        let s = space(32);
        let p = EvolutionParams {
            alpha: 1.0,
            kappa: 0.0,
            dt: 0.05,
            ..Default::default()
        };
        let mut st = Stepper::new(&s, &p, &Forcing::Zero).unwrap();
        let mut u = random_field(&s, 3, 0.5).unwrap();
        for j in 0..20 {
            let v = st.step(&u, j as f64 * p.dt, p.dt).unwrap();
            assert!(v.l2_norm() <= u.l2_norm() * (1.0 + 1e-14));
            u = v;
        }
    }

    #[test]
    fn rk4_rotation_is_nearly_isometric() {
        let s = space(16);
        let p = EvolutionParams {
            lambda: 1e-300,
            alpha: 1.0,
            kappa: 0.0,
            scheme: Scheme::ExplicitRk4,
            ..Default::default()
        };
        let u = random_field(&s, 5, 1.5).unwrap();
        let mut drift = Vec::new();
        for dt in [1e-3, 5e-4] {
            let mut st = Stepper::new(&s, &p, &Forcing::Zero).unwrap();
            let v = st.step(&u, 0.0, dt).unwrap();
            drift.push((v.l2_norm() - u.l2_norm()).abs());
        }
        assert!(drift[0] < 1e-9 * u.l2_norm());
        assert!(drift[1] < drift[0] || drift[0] < 1e-14);
    }

    #[test]
    fn semi_implicit_and_rk4_agree_to_first_order() {
        let s = space(32);
        let u0 = ComplexField::sample(&s, |x| (x[0].sin(), 0.5 * (2.0 * x[0]).sin()));
        let base = EvolutionParams {
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
            horizon: 0.2,
            ..Default::default()
        };
        let mut gaps = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let si = integrate_acgl(&u0, &Forcing::Zero, &EvolutionParams { dt, ..base.clone() }).unwrap();
            let rk = integrate_acgl(
                &u0,
                &Forcing::Zero,
                &EvolutionParams {
                    dt,
                    scheme: Scheme::ExplicitRk4,
                    ..base.clone()
                },
            )
            .unwrap();
            gaps.push(si.last().sub(rk.last()).unwrap().l2_norm());
        }
        for w in gaps.windows(2) {
            assert!((w[0] / w[1]).log2() >= 0.9, "{gaps:?}");
        }
    }

    #[test]
    fn nonfinite_run_declares_blowup() {
        let s = space(16);
        let u0 = ComplexField::eigenmode(&s, [1, 0], 1e3);
        let p = EvolutionParams {
            kappa: 5.0,
            dt: 1e-2,
            ..Default::default()
        };
        let traj = integrate_acgl(&u0, &Forcing::Zero, &p).unwrap();
        let idx = traj.blowup_index.expect("explicit nonlinearity must overflow");
        assert_eq!(traj.len(), idx);
        assert!(traj.diagnostics.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn zero_state_stays_zero() {
        let s = space(8);
        let traj = integrate_acgl(&ComplexField::zeros(&s), &Forcing::Zero, &EvolutionParams::default()).unwrap();
        assert!(traj.residuals().iter().all(|&r| r == 0.0));
        assert!(traj.last().l2_norm() == 0.0);
    }
}
