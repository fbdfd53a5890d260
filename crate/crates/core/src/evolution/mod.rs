//! Time integration of the real-pair Ginzburg-Landau system and of its
//! auxiliary linear problems.
//!
//! All integrators share one mode-wise kernel: the linear operator
//! `(lambda + alpha I) dphi` is applied implicitly through the exact inverse
//! `(aE + bI)^-1 = (aE - bI) / (a^2 + b^2)` of each 2x2 mode block, while
//! sources (nonlinearity, prescribed `h`, forcing, `gamma U`) are explicit.

mod auxiliary;
mod fixed_point;
mod residual;
mod stepper;

pub use auxiliary::{solve_aeh_mu, solve_linear_aeh};
pub use fixed_point::{ball_radius, fixed_point_solve, FixedPointReport, FixedPointSolution};
pub use residual::{acgl_residual, aeh_residual};
pub use stepper::{integrate_acgl, step_acgl, Stepper};

use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::field::{ComplexField, ModePair};
use crate::monotone::{phi, psi_r};
use crate::spectral::Space;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    SemiImplicit,
    ExplicitRk4,
}

/// Sign in front of `(kappa + beta I) dpsi_q(U)`.
///
/// `Focusing` is the equation as written; `Defocusing` reverses the sign of
/// the whole nonlinear term and exists only for comparison runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    Focusing,
    Defocusing,
}

impl Nonlinearity {
    pub fn sign(self) -> f64 {
        match self {
            Nonlinearity::Focusing => 1.0,
            Nonlinearity::Defocusing => -1.0,
        }
    }
}

/// Sobolev critical exponent `2*` (infinite for N = 1, 2).
pub fn critical_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    }
}

/// Coefficients, exponent, horizon and step of one run. Missing fields take
/// their [`Default`] values when deserialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionParams {
    pub lambda: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub q: f64,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub nonlinearity: Nonlinearity,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            lambda: 1.0,
            alpha: 0.0,
            kappa: 1.0,
            beta: 0.0,
            gamma: 0.0,
            q: 4.0,
            horizon: 1.0,
            dt: 1e-3,
            scheme: Scheme::SemiImplicit,
            nonlinearity: Nonlinearity::Focusing,
        }
    }
}

impl EvolutionParams {
    pub fn gamma_plus(&self) -> f64 {
        self.gamma.max(0.0)
    }

    /// Checks the parameter invariants for a domain of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("kappa", self.kappa),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("q", self.q),
            ("horizon", self.horizon),
            ("dt", self.dt),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(CglError::param(name, "must be finite"));
            }
        }
        for (name, v) in [("lambda", self.lambda), ("horizon", self.horizon), ("dt", self.dt)] {
            if v <= 0.0 {
                return Err(CglError::param(name, format!("must be positive, got {v}")));
            }
        }
        if self.kappa < 0.0 {
            return Err(CglError::param(
                "kappa",
                "must be nonnegative; use the defocusing nonlinearity to flip the sign",
            ));
        }
        let critical = critical_exponent(dim);
        if self.q >= critical {
            return Err(CglError::SupercriticalExponent {
                q: self.q,
                dim,
                critical,
            });
        }
        if self.q <= 2.0 {
            return Err(CglError::param("q", format!("must exceed 2, got {}", self.q)));
        }
        Ok(())
    }

    pub(crate) fn nonlinear_coeffs(&self) -> (f64, f64) {
        let s = self.nonlinearity.sign();
        (s * self.kappa, s * self.beta)
    }
}

/// Uniform grid `0, dt, 2dt, ...` ending exactly at `horizon`; the final
/// step may be shorter.
pub fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut t: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
    t.push(horizon);
    t
}

/// External force `F(t)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Constant(ComplexField),
    /// Samples with linear interpolation; times strictly increasing.
    Sampled {
        times: Vec<f64>,
        fields: Vec<ComplexField>,
    },
}

impl Forcing {
    pub fn sampled(times: Vec<f64>, fields: Vec<ComplexField>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(CglError::param("forcing", "need one field per sample time"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CglError::param("forcing", "sample times must be strictly increasing"));
        }
        for f in &fields[1..] {
            fields[0].check_same(f)?;
        }
        Ok(Forcing::Sampled { times, fields })
    }

    /// Checks that the forcing covers `[0, horizon]` on `space`.
    pub fn validate(&self, space: &Space, horizon: f64) -> Result<()> {
        match self {
            Forcing::Zero => Ok(()),
            Forcing::Constant(f) => {
                if f.space() != space {
                    return Err(CglError::DomainMismatch);
                }
                Ok(())
            }
            Forcing::Sampled { times, fields } => {
                if fields[0].space() != space {
                    return Err(CglError::DomainMismatch);
                }
                let (t0, t1) = (times[0], *times.last().unwrap());
                if t0 > 0.0 || t1 < horizon * (1.0 - 1e-12) {
                    return Err(CglError::param(
                        "forcing",
                        format!("samples cover [{t0}, {t1}], need [0, {horizon}]"),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    pub fn at(&self, space: &Space, t: f64) -> ComplexField {
        match self {
            Forcing::Zero => ComplexField::zeros(space),
            Forcing::Constant(f) => f.clone(),
            Forcing::Sampled { times, fields } => {
                let (i, w) = locate(times, t);
                if w == 0.0 {
                    fields[i].clone()
                } else {
                    fields[i].scale(1.0 - w).axpy(w, &fields[i + 1]).expect("same space")
                }
            }
        }
    }

    /// `|F(t)|_{L2}` at each of `times`.
    pub fn l2_norms(&self, space: &Space, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.at(space, t).l2_norm()).collect()
    }

    /// `||F||_{H^T}^2 = int_0^T |F(t)|^2 dt` (trapezoid on `times`).
    pub fn h_norm_sq(&self, space: &Space, times: &[f64]) -> f64 {
        let sq: Vec<f64> = self.l2_norms(space, times).iter().map(|x| x * x).collect();
        trapezoid(times, &sq)
    }
}

/// Index `i` and weight `w` with `t = (1-w) times[i] + w times[i+1]`,
/// clamped to the sampled range.
pub(crate) fn locate(times: &[f64], t: f64) -> (usize, f64) {
    let n = times.len();
    if n == 1 || t <= times[0] {
        return (0, 0.0);
    }
    if t >= times[n - 1] {
        return (n - 1, 0.0);
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    (i, w)
}

pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Forcing pre-transformed to mode space.
pub(crate) struct ForcingModes {
    kind: ForcingModesKind,
}

enum ForcingModesKind {
    Zero,
    Constant(ModePair),
    Sampled { times: Vec<f64>, modes: Vec<ModePair> },
}

impl ForcingModes {
    pub(crate) fn new(forcing: &Forcing) -> Self {
        let kind = match forcing {
            Forcing::Zero => ForcingModesKind::Zero,
            Forcing::Constant(f) => ForcingModesKind::Constant(f.to_modes()),
            Forcing::Sampled { times, fields } => ForcingModesKind::Sampled {
                times: times.clone(),
                modes: fields.iter().map(|f| f.to_modes()).collect(),
            },
        };
        ForcingModes { kind }
    }

    /// Adds `F(t)` in modes to `(o1, o2)`.
    pub(crate) fn add_to(&self, t: f64, o1: &mut [f64], o2: &mut [f64]) {
        match &self.kind {
            ForcingModesKind::Zero => {}
            ForcingModesKind::Constant(m) => {
                for k in 0..o1.len() {
                    o1[k] += m.c1[k];
                    o2[k] += m.c2[k];
                }
            }
            ForcingModesKind::Sampled { times, modes } => {
                let (i, w) = locate(times, t);
                let a = &modes[i];
                if w == 0.0 {
                    for k in 0..o1.len() {
                        o1[k] += a.c1[k];
                        o2[k] += a.c2[k];
                    }
                } else {
                    let b = &modes[i + 1];
                    for k in 0..o1.len() {
                        o1[k] += (1.0 - w) * a.c1[k] + w * b.c1[k];
                        o2[k] += (1.0 - w) * a.c2[k] + w * b.c2[k];
                    }
                }
            }
        }
    }
}

/// Prescribed source history `h(t)` on `[0, S]`, linearly interpolated
/// between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSeries {
    times: Vec<f64>,
    fields: Vec<ComplexField>,
}

impl SourceSeries {
    pub fn new(times: Vec<f64>, fields: Vec<ComplexField>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(CglError::param("source", "need one field per sample time"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CglError::param("source", "sample times must be strictly increasing"));
        }
        for f in &fields {
            fields[0].check_same(f)?;
            if !f.is_finite() {
                return Err(CglError::param("source", "entries must be finite"));
            }
        }
        Ok(SourceSeries { times, fields })
    }

    pub fn zero(space: &Space, times: &[f64]) -> Self {
        SourceSeries {
            times: times.to_vec(),
            fields: vec![ComplexField::zeros(space); times.len()],
        }
    }

    /// `dpsi_q` applied at each sample of a trajectory.
    pub fn from_trajectory(traj: &Trajectory, q: f64) -> Result<Self> {
        let fields = traj
            .states
            .iter()
            .map(|u| crate::monotone::grad_psi_r(u, q))
            .collect::<Result<Vec<_>>>()?;
        Ok(SourceSeries {
            times: traj.times.clone(),
            fields,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ComplexField] {
        &self.fields
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn at(&self, t: f64) -> ComplexField {
        let (i, w) = locate(&self.times, t);
        if w == 0.0 {
            self.fields[i].clone()
        } else {
            self.fields[i]
                .scale(1.0 - w)
                .axpy(w, &self.fields[i + 1])
                .expect("same space")
        }
    }

    /// `||h||_{H^S}^2`.
    pub fn h_norm_sq(&self) -> f64 {
        let sq: Vec<f64> = self.fields.iter().map(|f| f.l2_norm_sq()).collect();
        trapezoid(&self.times, &sq)
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    /// `||self - other||_{H^S}` for series on identical sample times.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.times != other.times {
            return Err(CglError::ConfigMismatch("source series sample times differ".into()));
        }
        let sq = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| Ok(a.sub(b)?.l2_norm_sq()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(trapezoid(&self.times, &sq).sqrt())
    }

    /// Restriction to samples with `t <= horizon`.
    pub fn truncated(&self, horizon: f64) -> Self {
        let n = self.times.partition_point(|&t| t <= horizon * (1.0 + 1e-12));
        SourceSeries {
            times: self.times[..n].to_vec(),
            fields: self.fields[..n].to_vec(),
        }
    }
}

/// Per-sample diagnostics of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub l2_sq: f64,
    pub phi: f64,
    pub psi_q: f64,
    /// L2 norm of the discrete equation residual; zero at the first sample.
    pub residual: f64,
}

impl StepDiagnostics {
    pub fn of(u: &ComplexField, q: f64) -> Self {
        StepDiagnostics {
            l2_sq: u.l2_norm_sq(),
            phi: phi(u),
            psi_q: psi_r(u, q).unwrap_or(f64::NAN),
            residual: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.l2_sq.is_finite() && self.phi.is_finite() && self.psi_q.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexField>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// First sample index at which the state stopped being finite.
    pub blowup_index: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &ComplexField {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn space(&self) -> &Space {
        self.states[0].space()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.residual).collect()
    }

    /// `sup_t |self(t) - other(t)|_{L2}` over common sample times.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(CglError::ConfigMismatch("trajectory lengths differ".into()));
        }
        let mut best: f64 = 0.0;
        for (a, b) in self.states.iter().zip(&other.states) {
            best = best.max(a.sub(b)?.l2_norm());
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Domain;

    #[test]
    fn time_grid_ends_at_horizon() {
        let t = time_grid(1.0, 0.3);
        assert_eq!(t.len(), 5);
        assert_eq!(*t.last().unwrap(), 1.0);
        let t = time_grid(1.0, 0.25);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn parameter_validation() {
        let mut p = EvolutionParams::default();
        assert!(p.validate(1).is_ok());
        p.q = 6.0;
        assert!(p.validate(2).is_ok());
        assert!(matches!(
            p.validate(3),
            Err(CglError::SupercriticalExponent { .. })
        ));
        p.q = 2.0;
        assert!(p.validate(1).is_err());
        let p = EvolutionParams {
            lambda: 0.0,
            ..Default::default()
        };
        assert!(p.validate(1).is_err());
        let p = EvolutionParams {
            dt: -1.0,
            ..Default::default()
        };
        assert!(p.validate(1).is_err());
        assert_eq!(critical_exponent(3), 6.0);
        assert_eq!(critical_exponent(1), f64::INFINITY);
    }

    #[test]
    fn sampled_forcing_interpolates() {
        let s = Space::new(Domain::interval(1.0, 8).unwrap());
        let a = ComplexField::eigenmode(&s, [1, 0], 1.0);
        let b = ComplexField::eigenmode(&s, [1, 0], 3.0);
        assert!(Forcing::sampled(vec![0.0, 0.0], vec![a.clone(), b.clone()]).is_err());
        let f = Forcing::sampled(vec![0.0, 1.0], vec![a.clone(), b]).unwrap();
        let mid = f.at(&s, 0.5);
        assert!((mid.to_modes().c1[0] - 2.0).abs() < 1e-12);
        assert!(f.validate(&s, 1.0).is_ok());
        assert!(f.validate(&s, 2.0).is_err());
        let norms = f.l2_norms(&s, &[0.0, 1.0]);
        assert!((norms[0] - (0.5f64).sqrt()).abs() < 1e-12);
    }
}
