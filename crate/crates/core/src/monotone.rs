//! Convex functionals `phi(U) = 1/2 |grad U|^2` and `psi_r(U) = 1/r |U|_r^r`,
//! their subdifferentials, resolvents and Yosida approximations.
//!
//! Everything involving `phi` acts diagonally on sine modes; everything
//! involving `psi_r` acts pointwise on the grid.

use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::field::{integrate_pointwise, ComplexField, ModePair};

/// Yosida regularization parameter `mu > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct YosidaParam(f64);

impl YosidaParam {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CglError::param("mu", format!("must be positive, got {mu}")));
        }
        Ok(YosidaParam(mu))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(CglError::param("r", format!("must satisfy 1 < r < inf, got {r}")));
    }
    Ok(())
}

/// `1/2 sum_k nu_k |U_k|^2`, the Dirichlet energy.
pub fn phi(u: &ComplexField) -> f64 {
    phi_modes(u.space().eigenvalues(), u.space().domain().mode_weight(), &u.to_modes())
}

pub(crate) fn phi_modes(nu: &[f64], weight: f64, m: &ModePair) -> f64 {
    let s: f64 = nu
        .iter()
        .zip(m.c1.iter().zip(&m.c2))
        .map(|(n, (a, b))| n * (a * a + b * b))
        .sum();
    0.5 * weight * s
}

fn scale_modes(u: &ComplexField, factor: impl Fn(f64) -> f64) -> ComplexField {
    let space = u.space();
    let mut m = u.to_modes();
    for (k, nu) in space.eigenvalues().iter().enumerate() {
        let f = factor(*nu);
        m.c1[k] *= f;
        m.c2[k] *= f;
    }
    ComplexField::from_modes(space, &m)
}

/// `-Delta U` with Dirichlet conditions.
pub fn grad_phi(u: &ComplexField) -> ComplexField {
    scale_modes(u, |nu| nu)
}

/// `|U|_{L2}^2` of `grad_phi(U)`, computed spectrally.
pub fn grad_phi_norm_sq(u: &ComplexField) -> f64 {
    let space = u.space();
    let m = u.to_modes();
    let s: f64 = space
        .eigenvalues()
        .iter()
        .zip(m.c1.iter().zip(&m.c2))
        .map(|(n, (a, b))| n * n * (a * a + b * b))
        .sum();
    space.domain().mode_weight() * s
}

/// `(1/r) int |U|^r`.
pub fn psi_r(u: &ComplexField, r: f64) -> Result<f64> {
    check_r(r)?;
    let vals: Vec<f64> = u.modulus().iter().map(|m| m.powf(r)).collect();
    Ok(integrate_pointwise(u.space(), &vals) / r)
}

/// Pointwise `|U|^(r-2) U`.
pub fn grad_psi_r(u: &ComplexField, r: f64) -> Result<ComplexField> {
    check_r(r)?;
    let (mut a, mut b) = (vec![0.0; u.space().len()], vec![0.0; u.space().len()]);
    grad_psi_pointwise(u.u1(), u.u2(), r, &mut a, &mut b);
    Ok(ComplexField::from_parts(u.space(), a, b))
}

pub(crate) fn grad_psi_pointwise(u1: &[f64], u2: &[f64], r: f64, o1: &mut [f64], o2: &mut [f64]) {
    let p = r - 2.0;
    for j in 0..u1.len() {
        let m2 = u1[j] * u1[j] + u2[j] * u2[j];
        let w = if m2 == 0.0 {
            // |U|^(r-2) U -> 0 as U -> 0 for every r > 1
            0.0
        } else if p == 2.0 {
            m2
        } else {
            m2.powf(0.5 * p)
        };
        o1[j] = w * u1[j];
        o2[j] = w * u2[j];
    }
}

/// `J_mu U = (1 + mu dphi)^-1 U`, scaling mode `k` by `1 / (1 + mu nu_k)`.
pub fn resolvent_phi(u: &ComplexField, mu: YosidaParam) -> ComplexField {
    let mu = mu.get();
    scale_modes(u, |nu| 1.0 / (1.0 + mu * nu))
}

/// `dphi_mu(U) = dphi(J_mu U)`, scaling mode `k` by `nu_k / (1 + mu nu_k)`.
pub fn yosida_phi(u: &ComplexField, mu: YosidaParam) -> ComplexField {
    let mu = mu.get();
    scale_modes(u, |nu| nu / (1.0 + mu * nu))
}

/// Moreau-Yosida envelope `phi_mu(U) = mu/2 |dphi_mu U|^2 + phi(J_mu U)`.
pub fn moreau_yosida_phi(u: &ComplexField, mu: YosidaParam) -> f64 {
    let y = yosida_phi(u, mu);
    let j = resolvent_phi(u, mu);
    0.5 * mu.get() * y.l2_norm_sq() + phi(&j)
}

/// Per-mode closed form of the Moreau-Yosida envelope:
/// `nu / (2 (1 + mu nu)) |c|^2` times the mode weight.
pub fn moreau_yosida_phi_modes(u: &ComplexField, mu: YosidaParam) -> f64 {
    let space = u.space();
    let m = u.to_modes();
    let mu = mu.get();
    let s: f64 = space
        .eigenvalues()
        .iter()
        .zip(m.c1.iter().zip(&m.c2))
        .map(|(nu, (a, b))| nu / (1.0 + mu * nu) * (a * a + b * b))
        .sum();
    0.5 * space.domain().mode_weight() * s
}

/// Solves `s + mu s^(r-1) = m` for `s in [0, m]`.
///
/// Newton from the asymptotic guess, falling back to bisection whenever an
/// iterate leaves the current bracket.
pub fn scalar_resolvent_psi(m: f64, mu: f64, r: f64) -> Result<f64> {
    if m == 0.0 {
        return Ok(0.0);
    }
    let f = |s: f64| s + mu * s.powf(r - 1.0) - m;
    let (mut lo, mut hi) = (0.0, m);
    let mut s = m.min((m / mu).powf(1.0 / (r - 1.0)));
    for _ in 0..200 {
        let fs = f(s);
        if fs == 0.0 {
            return Ok(s);
        }
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let df = 1.0 + mu * (r - 1.0) * s.powf(r - 2.0);
        let mut next = s - fs / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * s.max(f64::MIN_POSITIVE) || hi - lo <= 1e-16 * m {
            return Ok(next);
        }
        s = next;
    }
    Err(CglError::ResolventNonConvergence { magnitude: m })
}

/// `(1 + mu dpsi_r)^-1 U`, pointwise: same direction, shrunk magnitude.
pub fn resolvent_psi_r(u: &ComplexField, mu: YosidaParam, r: f64) -> Result<ComplexField> {
    if !(r > 2.0 && r.is_finite()) {
        return Err(CglError::param("r", format!("resolvent needs r > 2, got {r}")));
    }
    let n = u.space().len();
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let (x1, x2) = (u.u1()[j], u.u2()[j]);
        let m = x1.hypot(x2);
        if m == 0.0 {
            continue;
        }
        let s = scalar_resolvent_psi(m, mu.get(), r)?;
        a[j] = x1 * (s / m);
        b[j] = x2 * (s / m);
    }
    Ok(ComplexField::from_parts(u.space(), a, b))
}

/// `dpsi_{r,mu}(U) = dpsi_r(J_mu U)`.
pub fn yosida_psi_r(u: &ComplexField, mu: YosidaParam, r: f64) -> Result<ComplexField> {
    grad_psi_r(&resolvent_psi_r(u, mu, r)?, r)
}
