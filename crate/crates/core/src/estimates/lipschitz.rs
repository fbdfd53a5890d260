use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};

const REL_TOL: f64 = 1e-12;
const CHUNK: usize = 4096;

/// Constant `d_r` of the pointwise bound
/// `|(|U|^{r-2} u_i - |V|^{r-2} v_i)(u_j - v_j)| <= d_r (|U|^{r-2} + |V|^{r-2}) |U - V|^2`.
pub fn lipschitz_constant(r: f64) -> f64 {
    if r <= 3.0 {
        1.0
    } else if r < 4.0 {
        1.5
    } else {
        0.5 * (r - 1.0)
    }
}

/// Constant of `||U|^{r-2} - |V|^{r-2}| <= d (|U|^{r-3} + |V|^{r-3}) |U - V|`.
pub fn magnitude_constant(r: f64) -> f64 {
    if r > 3.0 && r < 4.0 {
        1.0
    } else {
        0.5 * (r - 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub r: f64,
    pub samples: usize,
    pub seed: u64,
    pub d_r: f64,
    pub d_tilde: f64,
    pub pair_violations: usize,
    pub magnitude_violations: usize,
    /// Largest observed `lhs / rhs` for each bound.
    pub worst_pair_ratio: f64,
    pub worst_magnitude_ratio: f64,
    pub counterexample: Option<Counterexample>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.pair_violations == 0 && self.magnitude_violations == 0
    }
}

#[derive(Default)]
struct Tally {
    pair_violations: usize,
    magnitude_violations: usize,
    worst_pair: f64,
    worst_mag: f64,
    counterexample: Option<Counterexample>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.pair_violations += other.pair_violations;
        self.magnitude_violations += other.magnitude_violations;
        self.worst_pair = self.worst_pair.max(other.worst_pair);
        self.worst_mag = self.worst_mag.max(other.worst_mag);
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
        self
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let mag = 10f64.powf(rng.random_range(-6.0..3.0));
    let th = rng.random_range(0.0..std::f64::consts::TAU);
    [mag * th.cos(), mag * th.sin()]
}

/// One pair from a mix of generic, near-zero, collinear and equal-modulus
/// configurations.
fn draw_pair(rng: &mut ChaCha8Rng) -> ([f64; 2], [f64; 2]) {
    let u = random_point(rng);
    let v = match rng.random_range(0..6u8) {
        0 => [0.0, 0.0],
        1 => {
            let s = 10f64.powf(rng.random_range(-12.0..0.0));
            [u[0] * s * 1e-3, u[1] * s * 1e-3]
        }
        2 => {
            let s = rng.random_range(-3.0..3.0);
            [u[0] * s, u[1] * s]
        }
        3 => {
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let m = (u[0] * u[0] + u[1] * u[1]).sqrt();
            [m * th.cos(), m * th.sin()]
        }
        4 => {
            let eps = 10f64.powf(rng.random_range(-10.0..-1.0));
            [u[0] * (1.0 + eps), u[1] - eps * u[0]]
        }
        _ => random_point(rng),
    };
    if rng.random_bool(0.5) {
        (u, v)
    } else {
        (v, u)
    }
}

/// `|U|^p - |V|^p`, accurate when `U` and `V` nearly coincide.
fn power_difference(u: [f64; 2], v: [f64; 2], mu: f64, mv: f64, p: f64) -> f64 {
    if mu == 0.0 || mv == 0.0 {
        return mu.powf(p) - mv.powf(p);
    }
    let dm = ((u[0] - v[0]) * (u[0] + v[0]) + (u[1] - v[1]) * (u[1] + v[1])) / (mu + mv);
    mv.powf(p) * (p * (dm / mv).ln_1p()).exp_m1()
}

fn check_pair(r: f64, d: f64, dt: f64, u: [f64; 2], v: [f64; 2], tally: &mut Tally) {
    let mu = u[0].hypot(u[1]);
    let mv = v[0].hypot(v[1]);
    let diff = [u[0] - v[0], u[1] - v[1]];
    let dist = diff[0].hypot(diff[1]);
    if dist == 0.0 {
        return;
    }
    let pu = mu.powf(r - 2.0);
    let pv = mv.powf(r - 2.0);
    let dp = power_difference(u, v, mu, mv, r - 2.0);
    let rhs = d * (pu + pv) * dist * dist;
    for i in 0..2 {
        for j in 0..2 {
            // pu u_i - pv v_i without cancellation
            let lhs = ((pu * diff[i] + dp * v[i]) * diff[j]).abs();
            let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
            tally.worst_pair = tally.worst_pair.max(ratio);
            if lhs > rhs * (1.0 + REL_TOL) {
                tally.pair_violations += 1;
                tally.counterexample.get_or_insert(Counterexample { u, v, lhs, rhs });
            }
        }
    }
    // 0^(r-3) is infinite for r < 3, which makes the bound trivially true
    let lhs = dp.abs();
    let rhs = dt * (mu.powf(r - 3.0) + mv.powf(r - 3.0)) * dist;
    let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    tally.worst_mag = tally.worst_mag.max(ratio);
    if lhs > rhs * (1.0 + REL_TOL) {
        tally.magnitude_violations += 1;
        tally.counterexample.get_or_insert(Counterexample { u, v, lhs, rhs });
    }
}

/// Fuzzes both pointwise bounds on `samples` seeded pairs in parallel.
/// The result depends only on `(r, samples, seed)`.
pub fn check_pointwise_lipschitz(r: f64, samples: usize, seed: u64) -> Result<LipschitzReport> {
    if !(r > 2.0) || !r.is_finite() {
        return Err(CglError::param("r", format!("must be a finite number above 2, got {r}")));
    }
    let d = lipschitz_constant(r);
    let dt = magnitude_constant(r);
    let chunks = samples.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut tally = Tally::default();
            let n = CHUNK.min(samples - c * CHUNK);
            for _ in 0..n {
                let (u, v) = draw_pair(&mut rng);
                check_pair(r, d, dt, u, v, &mut tally);
            }
            tally
        })
        .reduce(Tally::default, Tally::merge);
    Ok(LipschitzReport {
        r,
        samples,
        seed,
        d_r: d,
        d_tilde: dt,
        pair_violations: tally.pair_violations,
        magnitude_violations: tally.magnitude_violations,
        worst_pair_ratio: tally.worst_pair,
        worst_magnitude_ratio: tally.worst_mag,
        counterexample: tally.counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_by_range() {
        let d: Vec<f64> = [2.5, 3.0, 3.5, 4.0, 5.0].iter().map(|&r| lipschitz_constant(r)).collect();
        assert_eq!(d, vec![1.0, 1.0, 1.5, 1.5, 2.0]);
        let dt: Vec<f64> = [2.5, 3.0, 3.5, 4.0, 5.0].iter().map(|&r| magnitude_constant(r)).collect();
        assert_eq!(dt, vec![0.25, 0.5, 1.0, 1.0, 1.5]);
    }

    #[test]
    fn degenerate_pairs() {
        let mut t = Tally::default();
        check_pair(3.5, 1.5, 1.0, [0.3, -0.4], [0.0, 0.0], &mut t);
        check_pair(3.5, 1.5, 1.0, [0.3, -0.4], [0.3, -0.4], &mut t);
        assert_eq!(t.pair_violations + t.magnitude_violations, 0);
    }

    #[test]
    fn small_fuzz_passes_and_is_deterministic() {
        for r in [2.5, 3.0, 3.5, 4.0, 5.0] {
            let a = check_pointwise_lipschitz(r, 20_000, 11).unwrap();
            assert!(a.passed(), "{a:?}");
            let b = check_pointwise_lipschitz(r, 20_000, 11).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn undersized_constant_is_caught() {
        let mut t = Tally::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20_000 {
            let (u, v) = draw_pair(&mut rng);
            check_pair(5.0, 0.5, 0.2, u, v, &mut t);
        }
        assert!(t.pair_violations > 0 && t.magnitude_violations > 0);
        assert!(t.counterexample.is_some());
    }
}
