//! Real-pair representation `U = (u1, u2)` of complex-valued fields and the
//! action of the rotation matrix `I = ((0, 1), (-1, 0))`.
//!
//! The pair is identified with the complex field `u = u1 - i u2`. Under this
//! identification `I` is exactly multiplication by `i`, and `aE + bI` is
//! multiplication by `a + ib`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CglError, Result};
use crate::spectral::{integrate_slice, RealGrid, Space};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    space: Space,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

/// Mode-space coefficients of both components of a [`ComplexField`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModePair {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl ModePair {
    pub fn zeros(len: usize) -> Self {
        ModePair {
            c1: vec![0.0; len],
            c2: vec![0.0; len],
        }
    }
}

impl ComplexField {
    pub fn new(space: &Space, u1: RealGrid, u2: RealGrid) -> Result<Self> {
        Self::from_vecs(space, u1.0, u2.0)
    }

    pub fn from_vecs(space: &Space, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        for v in [&u1, &u2] {
            if v.len() != space.len() {
                return Err(CglError::ShapeMismatch {
                    expected: space.len(),
                    actual: v.len(),
                });
            }
        }
        if u1.iter().chain(&u2).any(|x| !x.is_finite()) {
            return Err(CglError::param("field", "entries must be finite"));
        }
        Ok(ComplexField {
            space: space.clone(),
            u1,
            u2,
        })
    }

    /// Unchecked constructor for internal kernels that guarantee shapes.
    pub(crate) fn from_parts(space: &Space, u1: Vec<f64>, u2: Vec<f64>) -> Self {
        debug_assert_eq!(u1.len(), space.len());
        debug_assert_eq!(u2.len(), space.len());
        ComplexField {
            space: space.clone(),
            u1,
            u2,
        }
    }

    pub fn zeros(space: &Space) -> Self {
        Self::from_parts(space, vec![0.0; space.len()], vec![0.0; space.len()])
    }

    /// Samples `(f1, f2)` at the interior grid points.
    pub fn sample(space: &Space, f: impl Fn([f64; 2]) -> (f64, f64)) -> Self {
        let d = space.domain();
        let (u1, u2) = (0..d.len()).map(|i| f(d.point(i))).unzip();
        Self::from_parts(space, u1, u2)
    }

    /// `amplitude` times the product sine mode `k` in the first component.
    pub fn eigenmode(space: &Space, k: [usize; 2], amplitude: f64) -> Self {
        let mut modes = ModePair::zeros(space.len());
        modes.c1[space.domain().flat_mode(k)] = amplitude;
        Self::from_modes(space, &modes)
    }

    pub fn from_modes(space: &Space, modes: &ModePair) -> Self {
        let mut u1 = vec![0.0; space.len()];
        let mut u2 = vec![0.0; space.len()];
        space.inverse(&modes.c1, &mut u1);
        space.inverse(&modes.c2, &mut u2);
        Self::from_parts(space, u1, u2)
    }

    pub fn to_modes(&self) -> ModePair {
        let mut m = ModePair::zeros(self.space.len());
        self.space.forward(&self.u1, &mut m.c1);
        self.space.forward(&self.u2, &mut m.c2);
        m
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn u2(&self) -> &[f64] {
        &self.u2
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.u1, self.u2)
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().chain(&self.u2).all(|x| x.is_finite())
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(CglError::DomainMismatch);
        }
        Ok(())
    }

    pub fn map2(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        let u1 = self.u1.iter().zip(&other.u1).map(|(a, b)| f(*a, *b)).collect();
        let u2 = self.u2.iter().zip(&other.u2).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self::from_parts(&self.space, u1, u2))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.map2(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.map2(other, |a, b| a - b)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.map2(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts(
            &self.space,
            self.u1.iter().map(|a| s * a).collect(),
            self.u2.iter().map(|a| s * a).collect(),
        )
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Pointwise Euclidean length `|U(x)|`.
    pub fn modulus(&self) -> Vec<f64> {
        self.u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| a.hypot(*b))
            .collect()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        inner_l2_unchecked(self, self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `(sum_x |U(x)|^r h^N)^(1/r)`.
    pub fn lr_norm(&self, r: f64) -> f64 {
        let s: f64 = self.modulus().iter().map(|m| m.powf(r)).sum();
        (s * self.space.domain().cell_volume()).powf(1.0 / r)
    }
}

/// `I U = (u2, -u1)`.
pub fn apply_i(u: &ComplexField) -> ComplexField {
    ComplexField::from_parts(
        &u.space,
        u.u2.clone(),
        u.u1.iter().map(|x| -x).collect(),
    )
}

/// `(aE + bI) U`.
pub fn complex_scale(a: f64, b: f64, u: &ComplexField) -> ComplexField {
    let (u1, u2): (Vec<f64>, Vec<f64>) = u
        .u1
        .iter()
        .zip(&u.u2)
        .map(|(x1, x2)| (a * x1 + b * x2, a * x2 - b * x1))
        .unzip();
    ComplexField::from_parts(&u.space, u1, u2)
}

/// Applies `(aE + bI)` to one `(x1, x2)` pair.
#[inline]
pub(crate) fn rotate(a: f64, b: f64, x1: f64, x2: f64) -> (f64, f64) {
    (a * x1 + b * x2, a * x2 - b * x1)
}

/// `(U, V)_{L2} = (u1, v1) + (u2, v2)` by trapezoid quadrature.
pub fn inner_l2(u: &ComplexField, v: &ComplexField) -> Result<f64> {
    u.check_same(v)?;
    Ok(inner_l2_unchecked(u, v))
}

/// `(U, IV)_{L2}`.
pub fn inner_l2_skew(u: &ComplexField, v: &ComplexField) -> Result<f64> {
    u.check_same(v)?;
    let s: f64 = u
        .u1
        .iter()
        .zip(&u.u2)
        .zip(v.u1.iter().zip(&v.u2))
        .map(|((a1, a2), (b1, b2))| a1 * b2 - a2 * b1)
        .sum();
    Ok(s * u.space.domain().cell_volume())
}

pub(crate) fn inner_l2_unchecked(u: &ComplexField, v: &ComplexField) -> f64 {
    let s: f64 = u
        .u1
        .iter()
        .zip(&v.u1)
        .chain(u.u2.iter().zip(&v.u2))
        .map(|(a, b)| a * b)
        .sum();
    s * u.space.domain().cell_volume()
}

/// Integral of a pointwise scalar over the domain.
pub(crate) fn integrate_pointwise(space: &Space, values: &[f64]) -> f64 {
    integrate_slice(space.domain(), values)
}

/// Seeded random field whose mode amplitudes are standard normals scaled by
/// `nu_k^(-decay)`. `decay > 1/2` keeps `phi` bounded under refinement.
pub fn random_field(space: &Space, seed: u64, decay: f64) -> Result<ComplexField> {
    if !(decay >= 0.0 && decay.is_finite()) {
        return Err(CglError::param("decay", format!("must be >= 0, got {decay}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = ModePair::zeros(space.len());
    for (k, nu) in space.eigenvalues().iter().enumerate() {
        let s = nu.powf(-decay);
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        modes.c1[k] = s * a;
        modes.c2[k] = s * b;
    }
    Ok(ComplexField::from_modes(space, &modes))
}
