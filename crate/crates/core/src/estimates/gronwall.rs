use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};

/// `sup_{s >= 0} int_s^{s+1} g` for the piecewise-linear interpolant `g` of
/// `(times, values)`, extended by zero outside the sampled range.
///
/// The window integral is piecewise quadratic in `s`, so the supremum is
/// taken exactly over breakpoints and stationary points.
pub fn window_sup_integral(times: &[f64], values: &[f64]) -> Result<f64> {
    check_series(times, values)?;
    if times.len() == 1 {
        return Ok(0.0);
    }
    let cum = cumulative(times, values);
    let primitive = |x: f64| primitive_at(times, values, &cum, x);
    let window = |s: f64| primitive(s + 1.0) - primitive(s);
    let deriv = |s: f64| value_at(times, values, s + 1.0) - value_at(times, values, s);

    let mut starts: Vec<f64> = vec![0.0];
    for &t in times {
        starts.push(t.max(0.0));
        starts.push((t - 1.0).max(0.0));
    }
    starts.sort_by(|a, b| a.total_cmp(b));
    starts.dedup();

    let mut best = window(starts[0]);
    for w in starts.windows(2) {
        let (a, b) = (w[0], w[1]);
        best = best.max(window(b));
        let (da, db) = (deriv(a), deriv(b));
        if da > 0.0 && db < 0.0 {
            let s = a + (b - a) * da / (da - db);
            best = best.max(window(s));
        }
    }
    Ok(best.max(0.0))
}

fn check_series(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() || times.is_empty() {
        return Err(CglError::param("series", "times and values must have equal nonzero length"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CglError::param("series", "times must be strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CglError::param("series", "values must be finite"));
    }
    Ok(())
}

fn cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut cum = vec![0.0; times.len()];
    for i in 1..times.len() {
        cum[i] = cum[i - 1] + 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    cum
}

fn value_at(times: &[f64], values: &[f64], x: f64) -> f64 {
    let n = times.len();
    if x < times[0] || x > times[n - 1] {
        return 0.0;
    }
    let i = times.partition_point(|&t| t <= x).clamp(1, n - 1) - 1;
    let w = (x - times[i]) / (times[i + 1] - times[i]);
    (1.0 - w) * values[i] + w * values[i + 1]
}

fn primitive_at(times: &[f64], values: &[f64], cum: &[f64], x: f64) -> f64 {
    let n = times.len();
    if x <= times[0] {
        return 0.0;
    }
    if x >= times[n - 1] {
        return cum[n - 1];
    }
    let i = times.partition_point(|&t| t <= x) - 1;
    let d = x - times[i];
    let slope = (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
    cum[i] + d * values[i] + 0.5 * slope * d * d
}

/// Bound `j(t) <= j0 e^{-delta t} + K / (1 - e^{-delta}) |||f|||_1` for
/// `j' + delta j <= K |f|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallEnvelope {
    pub j0: f64,
    pub delta: f64,
    pub k: f64,
    /// Unit-window norm of `|f|`.
    pub window_norm: f64,
    pub times: Vec<f64>,
    pub envelope: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCheck {
    pub holds: bool,
    /// Sample indices where `j` exceeds the envelope.
    pub violations: Vec<usize>,
    /// `max_t j(t) / envelope(t)`.
    pub max_ratio: f64,
}

/// Envelope on the sample times of `f`.
pub fn gronwall_envelope(j0: f64, delta: f64, k: f64, f_times: &[f64], f_values: &[f64]) -> Result<GronwallEnvelope> {
    if !(delta > 0.0) || !(k > 0.0) {
        return Err(CglError::param("gronwall", "delta and K must be positive"));
    }
    let abs: Vec<f64> = f_values.iter().map(|v| v.abs()).collect();
    let window_norm = window_sup_integral(f_times, &abs)?;
    let tail = k / (1.0 - (-delta).exp()) * window_norm;
    let envelope = f_times.iter().map(|&t| j0 * (-delta * t).exp() + tail).collect();
    Ok(GronwallEnvelope {
        j0,
        delta,
        k,
        window_norm,
        times: f_times.to_vec(),
        envelope,
    })
}

impl GronwallEnvelope {
    /// Compares a series sampled on the envelope's times.
    pub fn check(&self, j: &[f64]) -> Result<GronwallCheck> {
        if j.len() != self.envelope.len() {
            return Err(CglError::ShapeMismatch {
                expected: self.envelope.len(),
                actual: j.len(),
            });
        }
        let mut violations = Vec::new();
        let mut max_ratio: f64 = 0.0;
        for (i, (&v, &e)) in j.iter().zip(&self.envelope).enumerate() {
            if !(v <= e * (1.0 + 1e-9) + 1e-14) {
                violations.push(i);
            }
            if e > 0.0 {
                max_ratio = max_ratio.max(v / e);
            } else if v > 0.0 {
                max_ratio = f64::INFINITY;
            }
        }
        Ok(GronwallCheck {
            holds: violations.is_empty(),
            violations,
            max_ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t * i as f64 / n as f64).collect()
    }

    #[test]
    fn window_of_constants() {
        let t = grid(3.0, 300);
        let ones = vec![1.0; t.len()];
        assert!((window_sup_integral(&t, &ones).unwrap() - 1.0).abs() < 1e-12);
        let t = grid(0.5, 50);
        let ones = vec![2.0; t.len()];
        assert!((window_sup_integral(&t, &ones).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(window_sup_integral(&t, &vec![0.0; t.len()]).unwrap(), 0.0);
    }

    #[test]
    fn window_finds_interior_stationary_point() {
        // a tent of unit height on [0, 2] sampled coarsely: best window [0.5, 1.5]
        let t = vec![0.0, 1.0, 2.0];
        let v = vec![0.0, 1.0, 0.0];
        assert!((window_sup_integral(&t, &v).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn free_decay_is_tight() {
        let t = grid(5.0, 500);
        let env = gronwall_envelope(2.0, 0.7, 1.0, &t, &vec![0.0; t.len()]).unwrap();
        let j: Vec<f64> = t.iter().map(|&s| 2.0 * (-0.7 * s).exp()).collect();
        let c = env.check(&j).unwrap();
        assert!(c.holds);
        assert!((c.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_source_stays_below() {
        let (delta, k, j0) = (0.5, 2.0, 3.0);
        let t = grid(20.0, 2000);
        let env = gronwall_envelope(j0, delta, k, &t, &vec![1.0; t.len()]).unwrap();
        let j: Vec<f64> = t
            .iter()
            .map(|&s| k / delta + (j0 - k / delta) * (-delta * s).exp())
            .collect();
        assert!(env.check(&j).unwrap().holds);
    }

    #[test]
    fn violation_is_flagged() {
        let t = grid(2.0, 20);
        let env = gronwall_envelope(1.0, 1.0, 1.0, &t, &vec![0.0; t.len()]).unwrap();
        let mut j: Vec<f64> = t.iter().map(|&s| (-s).exp()).collect();
        j[7] *= 1.5;
        let c = env.check(&j).unwrap();
        assert!(!c.holds);
        assert_eq!(c.violations, vec![7]);
    }
}
