//! Property suite behind `cgl verify`.

use std::f64::consts::PI;

use cgl_core::estimates::{check_pointwise_lipschitz, gronwall_envelope};
use cgl_core::monotone::yosida_psi_r;
use cgl_core::{
    apply_i, grad_phi, grad_psi_r, inner_l2, phi, psi_r, random_field, resolvent_phi, yosida_phi, ComplexField,
    Domain, Space, YosidaParam,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::output::num;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    /// Worst observed value of the checked quantity, scaled so that the
    /// check passes when it is at most `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteSize {
    pub fields: usize,
    pub lipschitz_samples: usize,
}

impl SuiteSize {
    pub fn new(fast: bool) -> Self {
        if fast {
            SuiteSize {
                fields: 100,
                lipschitz_samples: 20_000,
            }
        } else {
            SuiteSize {
                fields: 1000,
                lipschitz_samples: 1_000_000,
            }
        }
    }
}

fn spaces() -> [Space; 2] {
    [
        Space::new(Domain::interval(PI, 48).expect("valid interval")),
        Space::new(Domain::rectangle(PI, 2.0, 12, 10).expect("valid rectangle")),
    ]
}

fn check(name: &str, samples: usize, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: worst <= tolerance,
        samples,
        worst,
        tolerance,
    }
}

fn ip(a: &ComplexField, b: &ComplexField) -> f64 {
    inner_l2(a, b).expect("same space")
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}

fn max_abs_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.u1()
        .iter()
        .zip(b.u1())
        .chain(a.u2().iter().zip(b.u2()))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Worst relative defect of the I-calculus identities and orthogonalities.
fn identity_defect(s: &Space, seed: u64) -> Result<f64, CliError> {
    let u = random_field(s, seed, 1.0).map_err(CliError::core("random field"))?;
    let v = random_field(s, seed ^ 0x9E37_79B9, 0.8).map_err(CliError::core("random field"))?;
    let mu = YosidaParam::new([1e-3, 1e-1, 1.0, 10.0][(seed % 4) as usize]).expect("positive");
    let iu = apply_i(&u);
    let gu = grad_phi(&u);
    let pu = grad_psi_r(&u, 4.0).map_err(CliError::core("dpsi"))?;
    let ym = yosida_phi(&u, mu);
    let yp = yosida_psi_r(&u, mu, 4.0).map_err(CliError::core("Yosida dpsi"))?;
    let (nu, nv) = (u.l2_norm(), v.l2_norm());
    let sup = |f: &ComplexField| f.modulus().into_iter().fold(0.0, f64::max);
    let defects = [
        rel(max_abs_diff(&apply_i(&iu), &u.neg()), sup(&u)),
        rel((iu.l2_norm() - nu).abs(), nu),
        rel((ip(&u, &apply_i(&v)) + ip(&iu, &v)).abs(), nu * nv),
        rel(max_abs_diff(&apply_i(&gu), &grad_phi(&iu)), sup(&gu)),
        rel(
            max_abs_diff(&apply_i(&pu), &grad_psi_r(&iu, 4.0).map_err(CliError::core("dpsi"))?),
            sup(&pu),
        ),
        rel(ip(&u, &iu).abs(), nu * nu),
        rel(ip(&u, &apply_i(&gu)).abs(), nu * gu.l2_norm()),
        rel(ip(&u, &apply_i(&pu)).abs(), nu * pu.l2_norm()),
        rel(ip(&ym, &iu).abs(), ym.l2_norm() * nu),
        rel(ip(&ym, &apply_i(&gu)).abs(), ym.l2_norm() * gu.l2_norm()),
        rel(ip(&yp, &iu).abs(), yp.l2_norm() * nu),
        rel(ip(&yp, &apply_i(&pu)).abs(), yp.l2_norm() * pu.l2_norm()),
        rel(
            (ip(&u, &v).powi(2) + ip(&u, &apply_i(&v)).powi(2) - (nu * nv).powi(2)).max(0.0),
            (nu * nv).powi(2),
        ),
        rel((ym.l2_norm() - gu.l2_norm()).max(0.0), gu.l2_norm()),
    ];
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Scaled violation of the subdifferential inequality for phi and psi_4, and
/// the defect of `U = J U + mu dphi_mu U`.
fn subdifferential_defect(s: &Space, seed: u64) -> Result<(f64, f64), CliError> {
    let u = random_field(s, seed, 1.0).map_err(CliError::core("random field"))?;
    let v = random_field(s, seed.wrapping_add(1), 1.0).map_err(CliError::core("random field"))?;
    let d = v.sub(&u).map_err(CliError::core("difference"))?;
    let psi = |w: &ComplexField| psi_r(w, 4.0).map_err(CliError::core("psi"));
    let g_phi = (ip(&grad_phi(&u), &d) - (phi(&v) - phi(&u))) / (1.0 + phi(&u) + phi(&v));
    let gp = grad_psi_r(&u, 4.0).map_err(CliError::core("dpsi"))?;
    let g_psi = (ip(&gp, &d) - (psi(&v)? - psi(&u)?)) / (1.0 + psi(&u)? + psi(&v)?);
    let mu = YosidaParam::new([1e-4, 1e-2, 1.0][(seed % 3) as usize]).expect("positive");
    let back = resolvent_phi(&u, mu)
        .axpy(mu.get(), &yosida_phi(&u, mu))
        .map_err(CliError::core("resolvent"))?;
    let sup = u.modulus().into_iter().fold(0.0, f64::max);
    Ok((g_phi.max(g_psi), max_abs_diff(&back, &u) / sup))
}

fn gronwall_checks() -> Result<(f64, bool), CliError> {
    let (delta, k, j0) = (0.6, 1.5, 2.0);
    let t: Vec<f64> = (0..=6000).map(|i| i as f64 * 1e-3).collect();
    let mut worst: f64 = 0.0;
    // exact solutions of j' + delta j = K c for c = 0 and c = 0.8
    for c in [0.0, 0.8] {
        let f = vec![c; t.len()];
        let env = gronwall_envelope(j0, delta, k, &t, &f).map_err(CliError::core("Gronwall envelope"))?;
        let steady = k * c / delta;
        let series: Vec<f64> = t.iter().map(|&s| steady + (j0 - steady) * (-delta * s).exp()).collect();
        worst = worst.max(env.check(&series).map_err(CliError::core("Gronwall check"))?.max_ratio);
    }
    let env = gronwall_envelope(j0, delta, k, &t, &vec![0.0; t.len()]).map_err(CliError::core("Gronwall envelope"))?;
    let bad: Vec<f64> = env.envelope.iter().map(|e| 1.1 * e).collect();
    let flagged = !env.check(&bad).map_err(CliError::core("Gronwall check"))?.holds;
    Ok((worst, flagged))
}

pub fn run_suite(size: SuiteSize, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let sp = spaces();
    let n = size.fields;
    let ids: Vec<u64> = (0..n as u64).collect();

    let identities = ids
        .par_iter()
        .map(|&i| identity_defect(&sp[(i % 4 == 3) as usize], seed.wrapping_add(2 * i)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let sub = ids
        .par_iter()
        .map(|&i| subdifferential_defect(&sp[(i % 4 == 3) as usize], seed.wrapping_add(1_000_003 + 2 * i)))
        .collect::<Result<Vec<_>, _>>()?;
    let ineq = sub.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let resolvent = sub.iter().map(|s| s.1).fold(0.0, f64::max);

    let mut out = vec![
        check("operator identities", n, identities, 1e-10),
        check("subdifferential inequality", n, ineq, 1e-8),
        check("resolvent identity", n, resolvent, 1e-12),
    ];
    for (i, r) in [2.5, 3.0, 3.5, 4.0, 5.0].into_iter().enumerate() {
        let rep = check_pointwise_lipschitz(r, size.lipschitz_samples, seed.wrapping_add(77 + i as u64))
            .map_err(CliError::core("Lipschitz fuzz"))?;
        let violations = (rep.pair_violations + rep.magnitude_violations) as f64;
        out.push(check(&format!("Lipschitz bounds r={r}"), rep.samples, violations, 0.0));
    }
    let (ratio, flagged) = gronwall_checks()?;
    out.push(check("Gronwall envelope on exact solutions", 2, ratio, 1.0 + 1e-9));
    out.push(check("Gronwall violation flagged", 1, if flagged { 0.0 } else { 1.0 }, 0.0));
    Ok(out)
}

pub fn table_csv(results: &[CheckResult]) -> String {
    let mut s = String::from("check,passed,samples,worst,tolerance\n");
    for r in results {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name,
            r.passed,
            r.samples,
            num(r.worst),
            num(r.tolerance)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let size = SuiteSize {
            fields: 20,
            lipschitz_samples: 2000,
        };
        let results = run_suite(size, 3).unwrap();
        assert!(results.iter().all(|r| r.passed), "{results:?}");
        assert_eq!(results.len(), 10);
    }
}
