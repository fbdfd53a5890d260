use cgl_core::analysis::{
    detect_blowup, monitored_global_run, small_data_certificate, BlowupOutcome, BlowupPolicy,
};
use cgl_core::{fixed_point_solve, integrate_acgl, CglError, ComplexField, EvolutionParams, Forcing, Space};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, ScenarioKind};
use crate::error::CliError;
use crate::output::{num, trajectory_csv, OutputDir};
use crate::verify::{run_suite, table_csv, SuiteSize};

/// Result summary of one scenario. `passed = false` is a negative result,
/// not an error.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
}

pub fn execute(cfg: &RunConfig, space: &Space, out: &mut OutputDir) -> Result<Outcome, CliError> {
    match cfg.scenario {
        ScenarioKind::Simulate => simulate(cfg, space, out),
        ScenarioKind::FixedPoint => fixed_point(cfg, space, out),
        ScenarioKind::Verify => verify(false, cfg.seed, out),
        ScenarioKind::Blowup => blowup(cfg, space, out),
        ScenarioKind::Certify => certify(cfg, space, out),
        ScenarioKind::Sweep => sweep(cfg, space, out),
    }
}

fn policy(cfg: &RunConfig) -> BlowupPolicy {
    BlowupPolicy {
        threshold: cfg.tolerances.blowup_threshold,
        max_refinements: cfg.tolerances.blowup_refinements,
        ..BlowupPolicy::default()
    }
}

fn simulate(cfg: &RunConfig, space: &Space, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_field(space)?;
    let forcing = cfg.forcing_field(space)?;
    let traj = integrate_acgl(&u0, &forcing, &cfg.params).map_err(CliError::core("simulate"))?;
    out.write("trajectory.csv", trajectory_csv(&traj).as_bytes())?;
    let last = traj.diagnostics.last().expect("initial sample");
    let summary = json!({
        "samples": traj.len(),
        "final_time": traj.times.last(),
        "blowup_index": traj.blowup_index,
        "final_l2_sq": last.l2_sq,
        "final_phi": last.phi,
        "max_residual": traj.residuals().into_iter().fold(0.0, f64::max),
    });
    out.write_json("summary.json", &summary)?;
    Ok(Outcome {
        passed: traj.blowup_index.is_none(),
        summary,
    })
}

fn fixed_point(cfg: &RunConfig, space: &Space, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_field(space)?;
    let forcing = cfg.forcing_field(space)?;
    let t = &cfg.tolerances;
    let horizon = t.fixed_point_horizon.unwrap_or(cfg.params.horizon);
    match fixed_point_solve(&u0, &forcing, horizon, &cfg.params, t.fixed_point_tol, t.max_iter) {
        Ok(sol) => {
            out.write("trajectory.csv", trajectory_csv(&sol.trajectory).as_bytes())?;
            out.write_json("fixed_point.json", &sol.report)?;
            Ok(Outcome {
                passed: true,
                summary: json!({
                    "converged": true,
                    "iterations": sol.report.iterations,
                    "horizon": sol.report.horizon,
                    "final_residual": sol.report.final_residual,
                }),
            })
        }
        Err(CglError::NonContractive { report }) | Err(CglError::BallEscape { report, .. }) => {
            out.write_json("fixed_point.json", &report)?;
            Ok(Outcome {
                passed: false,
                summary: json!({
                    "converged": false,
                    "iterations": report.iterations,
                    "stayed_in_ball": report.stayed_in_ball,
                }),
            })
        }
        Err(e) => Err(CliError::Core {
            context: "fixed point",
            source: e,
        }),
    }
}

pub fn verify(fast: bool, seed: u64, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let results = run_suite(SuiteSize::new(fast), seed)?;
    out.write("verify.csv", table_csv(&results).as_bytes())?;
    out.write_json("verify.json", &results)?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    Ok(Outcome {
        passed: failed.is_empty(),
        summary: json!({ "fast": fast, "checks": results.len(), "failed": failed }),
    })
}

fn blowup(cfg: &RunConfig, space: &Space, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_field(space)?;
    let forcing = cfg.forcing_field(space)?;
    let v = detect_blowup(&cfg.params, &u0, &forcing, &policy(cfg)).map_err(CliError::core("blow-up detection"))?;
    out.write_json("blowup.json", &v)?;
    Ok(Outcome {
        passed: v.outcome != BlowupOutcome::Inconclusive,
        summary: json!({ "outcome": v.outcome, "blowup_time": v.blowup_time, "peak_phi": v.peak_phi }),
    })
}

fn certify(cfg: &RunConfig, space: &Space, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_field(space)?;
    let forcing = cfg.forcing_field(space)?;
    let cert = match small_data_certificate(&cfg.params, space, cfg.tolerances.trials, cfg.seed) {
        Ok(c) => c,
        Err(CglError::NotApplicable(reason)) => {
            let summary = json!({ "applicable": false, "reason": reason });
            out.write_json("certificate.json", &summary)?;
            return Ok(Outcome { passed: false, summary });
        }
        Err(e) => {
            return Err(CliError::Core {
                context: "certificate",
                source: e,
            })
        }
    };
    let report = match monitored_global_run(&cfg.params, &u0, &forcing, &cert) {
        Ok(r) => r,
        Err(CglError::Precondition(reason)) => {
            let summary = json!({ "applicable": true, "certificate": cert, "precondition": reason });
            out.write_json("certificate.json", &summary)?;
            return Ok(Outcome {
                passed: false,
                summary: json!({ "applicable": true, "precondition": reason }),
            });
        }
        Err(e) => {
            return Err(CliError::Core {
                context: "monitored run",
                source: e,
            })
        }
    };
    out.write_json("certificate.json", &report)?;
    Ok(Outcome {
        passed: report.passed,
        summary: json!({
            "applicable": true,
            "passed": report.passed,
            "blowup": report.blowup,
            "max_phi": report.max_phi,
            "bound": report.bound_sq,
            "radius": report.certificate.radius,
        }),
    })
}

#[derive(Debug, Serialize)]
struct SweepCell {
    kappa: f64,
    amplitude: f64,
    outcome: BlowupOutcome,
    blowup_time: Option<f64>,
    peak_phi: f64,
}

fn sweep_cell(params: &EvolutionParams, u0: &ComplexField, forcing: &Forcing, policy: &BlowupPolicy, kappa: f64, amplitude: f64) -> Result<SweepCell, CliError> {
    let p = EvolutionParams {
        kappa,
        ..params.clone()
    };
    let v = detect_blowup(&p, &u0.scale(amplitude), forcing, policy).map_err(CliError::core("sweep cell"))?;
    Ok(SweepCell {
        kappa,
        amplitude,
        outcome: v.outcome,
        blowup_time: v.blowup_time,
        peak_phi: v.peak_phi,
    })
}

fn sweep(cfg: &RunConfig, space: &Space, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_field(space)?;
    let forcing = cfg.forcing_field(space)?;
    let pol = policy(cfg);
    let grid: Vec<(f64, f64)> = cfg
        .sweep
        .kappa
        .iter()
        .flat_map(|&k| cfg.sweep.amplitude.iter().map(move |&a| (k, a)))
        .collect();
    // cells run on the pool; rows are collected in grid order by this thread
    let cells = grid
        .par_iter()
        .map(|&(k, a)| sweep_cell(&cfg.params, &u0, &forcing, &pol, k, a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("kappa,amplitude,outcome,blowup_time,peak_phi\n");
    for c in &cells {
        let outcome = serde_json::to_value(c.outcome)?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            num(c.kappa),
            num(c.amplitude),
            outcome.as_str().unwrap_or_default(),
            c.blowup_time.map(num).unwrap_or_default(),
            num(c.peak_phi)
        ));
    }
    out.write("sweep.csv", csv.as_bytes())?;
    out.write_json("sweep.json", &cells)?;
    let count = |o: BlowupOutcome| cells.iter().filter(|c| c.outcome == o).count();
    let inconclusive = count(BlowupOutcome::Inconclusive);
    Ok(Outcome {
        passed: inconclusive == 0,
        summary: json!({
            "cells": cells.len(),
            "blowup": count(BlowupOutcome::Blowup),
            "global_on_horizon": count(BlowupOutcome::GlobalOnHorizon),
            "inconclusive": inconclusive,
        }),
    })
}
