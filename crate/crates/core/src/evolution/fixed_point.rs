use serde::{Deserialize, Serialize};

use super::{acgl_residual, solve_linear_aeh, time_grid, EvolutionParams, Forcing, SourceSeries, Trajectory};
use crate::error::{CglError, Result};
use crate::field::ComplexField;
use crate::monotone::phi;

/// Horizons below this many steps are not worth halving into.
const MIN_STEPS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// Ball radius `R`.
    pub radius: f64,
    pub horizon_requested: f64,
    /// Horizon `S` actually used.
    pub horizon: f64,
    pub halvings: usize,
    /// `||h_{n+1} - h_n||_{H^S}` per iteration.
    pub distances: Vec<f64>,
    /// `||h_n||_{H^S}` for every iterate including `h_0`.
    pub ball_norms: Vec<f64>,
    pub stayed_in_ball: bool,
    /// Max (ACGL) residual of the final trajectory.
    pub final_residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FixedPointReport {
    /// Successive distance ratios `d_{n+1} / d_n`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.distances.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointSolution {
    pub source: SourceSeries,
    pub trajectory: Trajectory,
    pub report: FixedPointReport,
}

/// Radius `R = max(|U0|^2/2 + phi(U0) + ||F||_{H^T}^2 / lambda, 1)` with
/// `T = params.horizon`.
pub fn ball_radius(u0: &ComplexField, forcing: &Forcing, params: &EvolutionParams) -> f64 {
    let times = time_grid(params.horizon, params.dt);
    let f = forcing.h_norm_sq(u0.space(), &times);
    (0.5 * u0.l2_norm_sq() + phi(u0) + f / params.lambda).max(1.0)
}

/// Picard iteration `h_{n+1} = dpsi_q(U^{h_n})` on the ball
/// `||h||_{H^S} <= R`, starting from `dpsi_q` along the `h = 0` trajectory.
///
/// `S` starts at `horizon` and is halved until the first image of the
/// map lies in the ball.
pub fn fixed_point_solve(
    u0: &ComplexField,
    forcing: &Forcing,
    horizon: f64,
    params: &EvolutionParams,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointSolution> {
    if !(tol > 0.0) {
        return Err(CglError::param("tol", format!("must be positive, got {tol}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CglError::param("horizon", format!("must be positive, got {horizon}")));
    }
    let space = u0.space();
    let radius = ball_radius(u0, forcing, params);
    let mut report = FixedPointReport {
        radius,
        horizon_requested: horizon,
        horizon,
        halvings: 0,
        distances: Vec::new(),
        ball_norms: Vec::new(),
        stayed_in_ball: true,
        final_residual: f64::NAN,
        converged: false,
        iterations: 0,
    };

    let mut s = horizon;
    let (mut h, mut traj) = loop {
        let zero = SourceSeries::zero(space, &time_grid(s, params.dt));
        let traj = solve_linear_aeh(&zero, forcing, u0, s, params)?;
        let h0 = SourceSeries::from_trajectory(&traj, params.q)?;
        let norm = h0.h_norm();
        if norm <= radius {
            report.ball_norms.push(norm);
            break (h0, traj);
        }
        if s / 2.0 < MIN_STEPS * params.dt {
            report.ball_norms.push(norm);
            report.stayed_in_ball = false;
            return Err(CglError::BallEscape {
                iteration: 0,
                norm,
                radius,
                report: Box::new(report),
            });
        }
        s /= 2.0;
        report.halvings += 1;
    };
    report.horizon = s;

    for n in 1..=max_iter {
        traj = solve_linear_aeh(&h, forcing, u0, s, params)?;
        let next = SourceSeries::from_trajectory(&traj, params.q)?;
        let dist = next.distance(&h)?;
        let norm = next.h_norm();
        report.iterations = n;
        report.distances.push(dist);
        report.ball_norms.push(norm);
        if !(norm <= radius) {
            report.stayed_in_ball = false;
            return Err(CglError::BallEscape {
                iteration: n,
                norm,
                radius,
                report: Box::new(report),
            });
        }
        h = next;
        if dist <= tol {
            report.converged = true;
            break;
        }
        if !dist.is_finite() {
            break;
        }
    }
    if !report.converged {
        return Err(CglError::NonContractive {
            report: Box::new(report),
        });
    }
    let res = acgl_residual(&traj, forcing, params)?;
    report.final_residual = res.iter().cloned().fold(0.0, f64::max);
    for (d, r) in traj.diagnostics.iter_mut().zip(&res) {
        d.residual = *r;
    }
    Ok(FixedPointSolution {
        source: h,
        trajectory: traj,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::integrate_acgl;
    use crate::spectral::{Domain, Space};
    use std::f64::consts::PI;

    fn space() -> Space {
        Space::new(Domain::interval(PI, 32).unwrap())
    }

    #[test]
    fn uncoupled_problem_converges_in_one_correction() {
        let s = space();
        let u0 = ComplexField::eigenmode(&s, [1, 0], 0.5);
        let p = EvolutionParams {
            kappa: 0.0,
            dt: 0.01,
            ..Default::default()
        };
        let sol = fixed_point_solve(&u0, &Forcing::Zero, 0.5, &p, 1e-12, 5).unwrap();
        assert_eq!(sol.report.iterations, 1);
        assert_eq!(sol.report.distances, vec![0.0]);
        assert!(sol.report.final_residual < 1e-10);
    }

    #[test]
    fn small_data_converges_geometrically() {
        let s = space();
        let u0 = ComplexField::eigenmode(&s, [1, 0], 0.01);
        let p = EvolutionParams {
            dt: 0.01,
            horizon: 0.5,
            ..Default::default()
        };
        let sol = fixed_point_solve(&u0, &Forcing::Zero, 0.5, &p, 1e-14, 50).unwrap();
        let r = &sol.report;
        assert!(r.converged && r.stayed_in_ball);
        assert_eq!(r.horizon, 0.5);
        assert!(r.contraction_ratios().iter().all(|&x| x < 1.0), "{:?}", r.distances);
        let direct = integrate_acgl(&u0, &Forcing::Zero, &p).unwrap();
        assert!(sol.trajectory.sup_distance(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn large_data_shrinks_horizon_or_escapes() {
        let s = space();
        let u0 = ComplexField::eigenmode(&s, [1, 0], 3.0);
        let p = EvolutionParams {
            dt: 1e-3,
            ..Default::default()
        };
        match fixed_point_solve(&u0, &Forcing::Zero, 1.0, &p, 1e-10, 200) {
            Ok(sol) => {
                assert!(sol.report.horizon <= 1.0);
                assert!(sol.report.ball_norms.iter().all(|&n| n <= sol.report.radius));
            }
            Err(CglError::BallEscape { norm, radius, .. }) => assert!(norm > radius),
            Err(CglError::NonContractive { report }) => assert!(!report.converged),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn iteration_budget_exhaustion_is_reported() {
        let s = space();
        let u0 = ComplexField::eigenmode(&s, [1, 0], 0.5);
        let p = EvolutionParams {
            dt: 0.01,
            ..Default::default()
        };
        let err = fixed_point_solve(&u0, &Forcing::Zero, 0.5, &p, 1e-300, 2).unwrap_err();
        match err {
            CglError::NonContractive { report } => {
                assert_eq!(report.distances.len(), 2);
                assert!(!report.converged);
            }
            e => panic!("{e}"),
        }
    }
}
