use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::evolution::critical_exponent;

/// Interpolation exponents attached to `q` in dimension `N`.
///
/// `xi` solves `1/(2(q-1)) = (1/2 - 2/N)(1 - xi) + (1/2 - 1/N) xi`,
/// `chi = xi (q-1) / (1 - (q-1)(1-xi))` and `eta` solves
/// `1/q = (1/2 - 1/N)(1 - eta) + eta/2`.
///
/// For `N <= 2` (and `N = 3` with `q <= 4`) the solution `xi` is at least 1;
/// only `chi > 1` and `(1 - xi)(q - 1) < 1` are guaranteed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnsExponents {
    pub q: f64,
    pub dim: usize,
    pub xi: f64,
    pub chi: f64,
    pub eta: f64,
    /// `2*`, infinite for `N <= 2`.
    pub critical: f64,
}

pub fn gns_exponents(q: f64, dim: usize) -> Result<GnsExponents> {
    if dim == 0 {
        return Err(CglError::param("dim", "must be at least 1"));
    }
    if !(q > 2.0) || !q.is_finite() {
        return Err(CglError::param("q", format!("must be a finite number above 2, got {q}")));
    }
    let critical = critical_exponent(dim);
    if q >= critical {
        return Err(CglError::SupercriticalExponent { q, dim, critical });
    }
    let n = dim as f64;
    // the coefficient of xi in the first equation is exactly 1/N
    let xi = (1.0 / (2.0 * (q - 1.0)) - (0.5 - 2.0 / n)) * n;
    let chi = xi * (q - 1.0) / (1.0 - (q - 1.0) * (1.0 - xi));
    // 1/q = 1/2 - (1 - eta)/N
    let eta = 1.0 - n * (0.5 - 1.0 / q);
    if !(chi > 1.0) || !((1.0 - xi) * (q - 1.0) < 1.0) {
        return Err(CglError::Precondition(format!(
            "exponent algebra failed for q = {q}, N = {dim}: xi = {xi}, chi = {chi}"
        )));
    }
    Ok(GnsExponents {
        q,
        dim,
        xi,
        chi,
        eta,
        critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_solved_cases() {
        let e = gns_exponents(4.0, 1).unwrap();
        assert!((e.xi - 5.0 / 3.0).abs() < 1e-14);
        assert!((e.chi - 5.0 / 3.0).abs() < 1e-14);
        assert!((e.eta - 0.75).abs() < 1e-14);
        assert!(e.critical.is_infinite());

        let e = gns_exponents(4.0, 3).unwrap();
        assert!((e.xi - 1.0).abs() < 1e-14);
        assert!((e.chi - 3.0).abs() < 1e-14);
        assert!((e.eta - 0.25).abs() < 1e-14);
        assert_eq!(e.critical, 6.0);

        let e = gns_exponents(3.0, 2).unwrap();
        assert!((e.xi - 1.5).abs() < 1e-14);
        assert!((e.eta - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn supercritical_rejected() {
        assert!(matches!(
            gns_exponents(6.0, 3),
            Err(CglError::SupercriticalExponent { .. })
        ));
        assert!(gns_exponents(2.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn identities_hold(dim in 1usize..=3, t in 0.01f64..0.99) {
            let q = if dim <= 2 { 2.0 + 10.0 * t } else { 2.0 + 4.0 * t };
            let e = gns_exponents(q, dim).unwrap();
            let n = dim as f64;
            let lhs = 1.0 / (2.0 * (q - 1.0));
            let rhs = (0.5 - 2.0 / n) * (1.0 - e.xi) + (0.5 - 1.0 / n) * e.xi;
            prop_assert!((lhs - rhs).abs() < 1e-14);
            let rhs = (0.5 - 1.0 / n) * (1.0 - e.eta) + 0.5 * e.eta;
            prop_assert!((1.0 / q - rhs).abs() < 1e-14);
            prop_assert!(e.chi > 1.0);
            prop_assert!((1.0 - e.xi) * (q - 1.0) < 1.0);
            prop_assert!(e.eta > 0.0 && e.eta < 1.0);
        }
    }
}
