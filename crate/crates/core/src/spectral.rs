//! Dirichlet sine-mode discretization of intervals and rectangles.
//!
//! Grid points are strictly interior, `x_j = j * h` with `h = L / (n + 1)`,
//! so the homogeneous Dirichlet condition is built into the storage. On such
//! a grid the sampled modes `sin(k pi x / L)`, `k = 1..n`, are exactly
//! orthogonal, which makes the discrete sine transform an exact change of
//! basis and the Dirichlet Laplacian exactly diagonal.
//!
//! Normalization: a grid `g` is expanded as `g(x) = sum_k c_k prod_d sin(k_d pi x_d / L_d)`,
//! so sampling `sin(x)` on `(0, pi)` yields the first unit vector. With this
//! choice `integrate(g^2) = prod_d (L_d / 2) * sum_k c_k^2` holds exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};

/// Minimum number of interior points per axis.
pub const MIN_RESOLUTION: usize = 4;

/// An interval `(0, L)` or a rectangle `(0, L1) x (0, L2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    dim: usize,
    lengths: [f64; 2],
    sizes: [usize; 2],
}

impl Domain {
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        Self::validate_axis(length, n)?;
        Ok(Domain {
            dim: 1,
            lengths: [length, 0.0],
            sizes: [n, 1],
        })
    }

    pub fn rectangle(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        Self::validate_axis(l1, n1)?;
        Self::validate_axis(l2, n2)?;
        Ok(Domain {
            dim: 2,
            lengths: [l1, l2],
            sizes: [n1, n2],
        })
    }

    fn validate_axis(length: f64, n: usize) -> Result<()> {
        if !(length.is_finite() && length > 0.0) {
            return Err(CglError::InvalidDomain(format!(
                "side length must be positive and finite, got {length}"
            )));
        }
        if n < MIN_RESOLUTION {
            return Err(CglError::InvalidDomain(format!(
                "resolution must be at least {MIN_RESOLUTION}, got {n}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self, axis: usize) -> f64 {
        assert!(axis < self.dim, "axis {axis} out of range");
        self.lengths[axis]
    }

    pub fn resolution(&self, axis: usize) -> usize {
        assert!(axis < self.dim, "axis {axis} out of range");
        self.sizes[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length(axis) / (self.resolution(axis) + 1) as f64
    }

    /// Total number of interior grid points (equals the number of modes).
    pub fn len(&self) -> usize {
        self.sizes[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of a single grid point.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|d| self.spacing(d)).product()
    }

    /// `prod_d L_d / 2`, the squared L2 norm of a unit-coefficient mode.
    pub fn mode_weight(&self) -> f64 {
        (0..self.dim).map(|d| self.length(d) / 2.0).product()
    }

    /// Coordinates of the grid point with flat (row-major) index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [(idx + 1) as f64 * self.spacing(0), 0.0],
            _ => {
                let n2 = self.sizes[1];
                let (i, j) = (idx / n2, idx % n2);
                [
                    (i + 1) as f64 * self.spacing(0),
                    (j + 1) as f64 * self.spacing(1),
                ]
            }
        }
    }

    /// Mode multi-index (1-based) of the flat mode index `idx`.
    pub fn mode_index(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx + 1, 0],
            _ => {
                let n2 = self.sizes[1];
                [idx / n2 + 1, idx % n2 + 1]
            }
        }
    }

    /// Flat index of a 1-based mode multi-index.
    pub fn flat_mode(&self, k: [usize; 2]) -> usize {
        match self.dim {
            1 => k[0] - 1,
            _ => (k[0] - 1) * self.sizes[1] + (k[1] - 1),
        }
    }
}

/// Dirichlet Laplacian eigenvalues `nu_k = sum_d (k_d pi / L_d)^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    domain: Domain,
    eigenvalues: Vec<f64>,
    lambda1: f64,
}

impl SpectralBasis {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: [usize; 2]) -> f64 {
        self.eigenvalues[self.domain.flat_mode(k)]
    }

    /// First Dirichlet eigenvalue, the Poincare constant.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
}

pub fn build_basis(domain: &Domain) -> SpectralBasis {
    let eigenvalues: Vec<f64> = (0..domain.len())
        .map(|idx| {
            let k = domain.mode_index(idx);
            (0..domain.dim())
                .map(|d| (k[d] as f64 * PI / domain.length(d)).powi(2))
                .sum()
        })
        .collect();
    let lambda1 = eigenvalues[0];
    SpectralBasis {
        domain: *domain,
        eigenvalues,
        lambda1,
    }
}

/// Values on the interior grid of a [`Domain`], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid(pub Vec<f64>);

impl RealGrid {
    pub fn zeros(domain: &Domain) -> Self {
        RealGrid(vec![0.0; domain.len()])
    }

    pub fn sample(domain: &Domain, f: impl Fn([f64; 2]) -> f64) -> Self {
        RealGrid((0..domain.len()).map(|i| f(domain.point(i))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Sine-mode coefficients, indexed like [`SpectralBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeVector(pub Vec<f64>);

impl ModeVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// DST-I table for one axis: `table[k * n + j] = sin(pi (k+1) (j+1) / (n+1))`.
#[derive(Debug)]
struct SineTable {
    n: usize,
    table: Vec<f64>,
}

impl SineTable {
    fn new(n: usize) -> Self {
        let m = (n + 1) as f64;
        let mut table = Vec::with_capacity(n * n);
        for k in 1..=n {
            for j in 1..=n {
                // Reduce the argument mod 2(n+1) so large products stay accurate.
                let r = (k * j) % (2 * (n + 1));
                table.push((PI * r as f64 / m).sin());
            }
        }
        SineTable { n, table }
    }

    /// `out[k] = scale * sum_j table[k][j] * input[j * stride]`, strided in and out.
    fn apply(&self, input: &[f64], in_stride: usize, out: &mut [f64], out_stride: usize, scale: f64) {
        let n = self.n;
        for k in 0..n {
            let row = &self.table[k * n..(k + 1) * n];
            let mut acc = 0.0;
            for (j, s) in row.iter().enumerate() {
                acc += s * input[j * in_stride];
            }
            out[k * out_stride] = scale * acc;
        }
    }
}

#[derive(Debug)]
struct SpaceInner {
    domain: Domain,
    basis: SpectralBasis,
    tables: Vec<SineTable>,
}

/// Shared discretization context: domain, eigenvalues and transform tables.
///
/// Cheap to clone; every [`crate::field::ComplexField`] carries one.
#[derive(Clone, Debug)]
pub struct Space(Arc<SpaceInner>);

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.domain == other.0.domain
    }
}

impl Space {
    pub fn new(domain: Domain) -> Self {
        let basis = build_basis(&domain);
        let tables = (0..domain.dim())
            .map(|d| SineTable::new(domain.resolution(d)))
            .collect();
        Space(Arc::new(SpaceInner {
            domain,
            basis,
            tables,
        }))
    }

    pub fn domain(&self) -> &Domain {
        &self.0.domain
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.0.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.0.basis.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.0.basis.lambda1
    }

    pub fn len(&self) -> usize {
        self.0.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_len(&self, actual: usize) -> Result<()> {
        let expected = self.len();
        if actual != expected {
            return Err(CglError::ShapeMismatch { expected, actual });
        }
        Ok(())
    }

    pub fn to_modes(&self, grid: &RealGrid) -> Result<ModeVector> {
        self.check_len(grid.0.len())?;
        let mut out = vec![0.0; self.len()];
        self.forward(&grid.0, &mut out);
        Ok(ModeVector(out))
    }

    pub fn from_modes(&self, modes: &ModeVector) -> Result<RealGrid> {
        self.check_len(modes.0.len())?;
        let mut out = vec![0.0; self.len()];
        self.inverse(&modes.0, &mut out);
        Ok(RealGrid(out))
    }

    /// Grid values to mode coefficients. Slices must have length `self.len()`.
    pub(crate) fn forward(&self, grid: &[f64], modes: &mut [f64]) {
        self.transform(grid, modes, true);
    }

    /// Mode coefficients to grid values. Slices must have length `self.len()`.
    pub(crate) fn inverse(&self, modes: &[f64], grid: &mut [f64]) {
        self.transform(modes, grid, false);
    }

    fn transform(&self, input: &[f64], out: &mut [f64], forward: bool) {
        debug_assert_eq!(input.len(), self.len());
        debug_assert_eq!(out.len(), self.len());
        let d = &self.0.domain;
        let scale = |n: usize| if forward { 2.0 / (n + 1) as f64 } else { 1.0 };
        match d.dim() {
            1 => {
                let t = &self.0.tables[0];
                t.apply(input, 1, out, 1, scale(t.n));
            }
            _ => {
                let (t0, t1) = (&self.0.tables[0], &self.0.tables[1]);
                let (n1, n2) = (t0.n, t1.n);
                let mut tmp = vec![0.0; n1 * n2];
                for i in 0..n1 {
                    t1.apply(
                        &input[i * n2..(i + 1) * n2],
                        1,
                        &mut tmp[i * n2..(i + 1) * n2],
                        1,
                        scale(n2),
                    );
                }
                for j in 0..n2 {
                    t0.apply(&tmp[j..], n2, &mut out[j..], n2, scale(n1));
                }
            }
        }
    }

    /// Composite trapezoid rule with zero boundary values.
    pub fn integrate(&self, grid: &RealGrid) -> Result<f64> {
        self.check_len(grid.0.len())?;
        Ok(integrate_slice(&self.0.domain, &grid.0))
    }

    /// Applies `-Delta` in mode space.
    pub fn neg_laplacian_modes(&self, modes: &ModeVector) -> Result<ModeVector> {
        self.check_len(modes.0.len())?;
        Ok(ModeVector(
            modes
                .0
                .iter()
                .zip(self.eigenvalues())
                .map(|(c, nu)| c * nu)
                .collect(),
        ))
    }
}

pub fn integrate(domain: &Domain, grid: &RealGrid) -> Result<f64> {
    if grid.0.len() != domain.len() {
        return Err(CglError::ShapeMismatch {
            expected: domain.len(),
            actual: grid.0.len(),
        });
    }
    Ok(integrate_slice(domain, &grid.0))
}

pub(crate) fn integrate_slice(domain: &Domain, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * domain.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::interval(0.0, 16).is_err());
        assert!(Domain::interval(-1.0, 16).is_err());
        assert!(Domain::interval(1.0, 3).is_err());
        assert!(Domain::rectangle(1.0, f64::NAN, 8, 8).is_err());
        let d = Domain::interval(PI, 7).unwrap();
        assert_eq!(d.spacing(0), PI / 8.0);
        assert!(d.point(6)[0] < PI);
    }

    #[test]
    fn eigenvalues_on_unit_pi_interval() {
        let b = build_basis(&Domain::interval(PI, 64).unwrap());
        assert!((b.lambda1() - 1.0).abs() < 1e-14);
        for k in 1..=64 {
            assert!(rel(b.eigenvalue([k, 0]), (k * k) as f64) < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_on_square_and_long_interval() {
        let b = build_basis(&Domain::rectangle(PI, PI, 8, 8).unwrap());
        assert!((b.lambda1() - 2.0).abs() < 1e-14);
        assert!((b.eigenvalue([2, 3]) - 13.0).abs() < 1e-12);
        // nondecreasing under componentwise increase of k
        for k1 in 1..8 {
            for k2 in 1..8 {
                let v = b.eigenvalue([k1, k2]);
                assert!(b.eigenvalue([k1 + 1, k2]) >= v);
                assert!(b.eigenvalue([k1, k2 + 1]) >= v);
            }
        }
        let b = build_basis(&Domain::interval(2.0 * PI, 32).unwrap());
        assert!((b.lambda1() - 0.25).abs() < 1e-15);
    }

    /// Power iteration on the inverse of the finite-difference Dirichlet
    /// Laplacian; its smallest eigenvalue must approach (pi/L)^2.
    #[test]
    fn finite_difference_lambda1_converges_to_quarter() {
        fn fd_lambda1(l: f64, n: usize) -> f64 {
            let h = l / (n + 1) as f64;
            // Thomas solve of (-D2) x = b, tridiagonal (-1, 2, -1)/h^2.
            let solve = |b: &[f64]| -> Vec<f64> {
                let mut c = vec![0.0; n];
                let mut d = vec![0.0; n];
                let diag = 2.0 / (h * h);
                let off = -1.0 / (h * h);
                c[0] = off / diag;
                d[0] = b[0] / diag;
                for i in 1..n {
                    let m = diag - off * c[i - 1];
                    c[i] = off / m;
                    d[i] = (b[i] - off * d[i - 1]) / m;
                }
                let mut x = vec![0.0; n];
                x[n - 1] = d[n - 1];
                for i in (0..n - 1).rev() {
                    x[i] = d[i] - c[i] * x[i + 1];
                }
                x
            };
            let mut v = vec![1.0; n];
            let mut est = 0.0;
            for _ in 0..200 {
                let w = solve(&v);
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dot: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
                let vn: f64 = v.iter().map(|x| x * x).sum();
                est = vn / dot;
                v = w.iter().map(|x| x / norm).collect();
            }
            est
        }
        let mut prev_err = f64::INFINITY;
        for n in [16, 32, 64, 128] {
            let err = (fd_lambda1(2.0 * PI, n) - 0.25).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-4);
        let b = build_basis(&Domain::interval(2.0 * PI, 128).unwrap());
        assert!((b.lambda1() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sine_sample_is_first_mode() {
        let d = Domain::interval(PI, 64).unwrap();
        let s = Space::new(d);
        let g = RealGrid::sample(&d, |x| x[0].sin());
        let m = s.to_modes(&g).unwrap();
        assert!((m.0[0] - 1.0).abs() < 1e-13);
        assert!(m.0[1..].iter().all(|c| c.abs() < 1e-13));
        let z = s.to_modes(&RealGrid::zeros(&d)).unwrap();
        assert!(z.0.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn round_trip_and_parseval_1d_and_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [
            Domain::interval(1.3, 37).unwrap(),
            Domain::rectangle(PI, 2.0, 12, 9).unwrap(),
        ] {
            let s = Space::new(d);
            let g = RealGrid((0..d.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
            let m = s.to_modes(&g).unwrap();
            let back = s.from_modes(&m).unwrap();
            let num: f64 = g.0.iter().zip(&back.0).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = g.0.iter().map(|a| a * a).sum();
            assert!((num / den).sqrt() < 1e-12);

            let sq = RealGrid(g.0.iter().map(|v| v * v).collect());
            let quad = s.integrate(&sq).unwrap();
            let modal = d.mode_weight() * m.0.iter().map(|c| c * c).sum::<f64>();
            assert!(rel(quad, modal) < 1e-10);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let s = Space::new(Domain::interval(1.0, 8).unwrap());
        assert_eq!(
            s.to_modes(&RealGrid(vec![0.0; 7])),
            Err(CglError::ShapeMismatch {
                expected: 8,
                actual: 7
            })
        );
        assert!(s.from_modes(&ModeVector(vec![0.0; 9])).is_err());
    }

    #[test]
    fn laplacian_is_diagonal_on_products_of_sines() {
        let d = Domain::rectangle(2.0, 3.0, 10, 11).unwrap();
        let s = Space::new(d);
        let (k1, k2) = (3usize, 4usize);
        let g = RealGrid::sample(&d, |x| {
            (k1 as f64 * PI * x[0] / 2.0).sin() * (k2 as f64 * PI * x[1] / 3.0).sin()
        });
        let m = s.to_modes(&g).unwrap();
        let lm = s.neg_laplacian_modes(&m).unwrap();
        let nu = s.basis().eigenvalue([k1, k2]);
        for (a, b) in lm.0.iter().zip(&m.0) {
            assert!((a - nu * b).abs() < 1e-10);
        }
        assert!((m.0[d.flat_mode([k1, k2])] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_closed_forms() {
        let d = Domain::interval(PI, 256).unwrap();
        let sin2 = RealGrid::sample(&d, |x| x[0].sin().powi(2));
        assert!(rel(integrate(&d, &sin2).unwrap(), PI / 2.0) < 1e-4);
        let sin4 = RealGrid::sample(&d, |x| x[0].sin().powi(4));
        assert!(rel(integrate(&d, &sin4).unwrap(), 3.0 * PI / 8.0) < 1e-4);
        assert_eq!(integrate(&d, &RealGrid::zeros(&d)).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        // x(pi - x) e^x does not vanish in derivative at the ends, so the
        // trapezoid error is genuinely O(h^2) rather than spectrally small.
        let exact = {
            // int_0^pi x(pi-x)e^x dx = e^pi (pi - 2) + (pi + 2)
            PI.exp() * (PI - 2.0) + (PI + 2.0)
        };
        let err = |n: usize| {
            let d = Domain::interval(PI, n).unwrap();
            let g = RealGrid::sample(&d, |x| x[0] * (PI - x[0]) * x[0].exp());
            (integrate(&d, &g).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(63), err(127));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "order {order}");
    }
}
