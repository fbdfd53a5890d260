use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::estimates::window_sup_integral;
use crate::evolution::{time_grid, Forcing};
use crate::spectral::Space;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// `sup_s int_s^{s+1} |F|_{L2} dt`.
    L1,
    /// `(sup_s int_s^{s+1} |F|_{L2}^2 dt)^{1/2}`.
    L2,
}

/// Unit-window norm of the zero extension of `F` restricted to
/// `[0, horizon]`, with `|F(t)|` sampled every `dt` and at the forcing's own
/// sample times.
pub fn window_norm(forcing: &Forcing, space: &Space, horizon: f64, dt: f64, kind: WindowKind) -> Result<f64> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(CglError::param("window", "horizon and dt must be positive"));
    }
    if forcing.is_zero() {
        return Ok(0.0);
    }
    forcing.validate(space, horizon)?;
    let mut times = time_grid(horizon, dt);
    if let Forcing::Sampled { times: ts, .. } = forcing {
        times.extend(ts.iter().copied().filter(|&t| t > 0.0 && t < horizon));
        times.sort_by(|a, b| a.total_cmp(b));
        times.dedup();
    }
    let norms = forcing.l2_norms(space, &times);
    match kind {
        WindowKind::L1 => window_sup_integral(&times, &norms),
        WindowKind::L2 => {
            let sq: Vec<f64> = norms.iter().map(|x| x * x).collect();
            Ok(window_sup_integral(&times, &sq)?.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ComplexField;
    use crate::spectral::Domain;
    use std::f64::consts::PI;

    #[test]
    fn constant_forcing_windows() {
        let s = Space::new(Domain::interval(PI, 16).unwrap());
        assert_eq!(window_norm(&Forcing::Zero, &s, 2.0, 0.01, WindowKind::L2).unwrap(), 0.0);
        let f = ComplexField::eigenmode(&s, [1, 0], 2.0);
        let c = f.l2_norm();
        let f = Forcing::Constant(f);
        let full = window_norm(&f, &s, 3.0, 0.01, WindowKind::L2).unwrap();
        assert!((full - c).abs() < 1e-12);
        let half = window_norm(&f, &s, 0.5, 0.01, WindowKind::L2).unwrap();
        assert!((half - c * 0.5f64.sqrt()).abs() < 1e-12);
        let l1 = window_norm(&f, &s, 0.5, 0.01, WindowKind::L1).unwrap();
        assert!((l1 - 0.5 * c).abs() < 1e-12);
    }
}
