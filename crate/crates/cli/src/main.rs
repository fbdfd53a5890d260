mod config;
mod error;
mod output;
mod scenario;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{RunConfig, ScenarioKind};
use error::CliError;
use output::OutputDir;
use scenario::Outcome;

#[derive(Parser, Debug)]
#[command(name = "cgl", version, about = "Complex Ginzburg-Landau scenarios: simulation, estimates and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario named in the config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the property suite.
    Verify {
        /// Smaller sample counts.
        #[arg(long)]
        fast: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Blow-up verdicts over the config's kappa x amplitude grid.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Small-data certificate and monitored global run.
    Certify {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Time step overriding the config.
    #[arg(long)]
    dt: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

const DEFAULT_OUT: &str = "cgl-out";

fn load(path: &Path, common: &Common, scenario: Option<ScenarioKind>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = common.dt {
        cfg.params.dt = dt;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let common = match &cli.command {
        Command::Run { common, .. }
        | Command::Verify { common, .. }
        | Command::Sweep { common, .. }
        | Command::Certify { common, .. } => common,
    };
    if let Some(k) = common.threads {
        if k == 0 {
            return Err(CliError::Config {
                path: "--threads".into(),
                message: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config {
                path: "--threads".into(),
                message: e.to_string(),
            })?;
    }
    let start = Instant::now();

    let (cfg, resolved, outcome, out) = match &cli.command {
        Command::Verify { fast, common } => {
            let root = common.out.clone().unwrap_or_else(|| DEFAULT_OUT.into());
            let mut out = OutputDir::create(&root)?;
            let seed = common.seed.unwrap_or(0);
            let outcome = scenario::verify(*fast, seed, &mut out)?;
            (None, json!({ "scenario": "verify", "fast": fast, "seed": seed }), outcome, out)
        }
        Command::Run { config, common } | Command::Sweep { config, common } | Command::Certify { config, common } => {
            let forced = match &cli.command {
                Command::Sweep { .. } => Some(ScenarioKind::Sweep),
                Command::Certify { .. } => Some(ScenarioKind::Certify),
                _ => None,
            };
            let cfg = load(config, common, forced)?;
            let space = cfg.validate()?;
            let root = common
                .out
                .clone()
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| DEFAULT_OUT.into());
            let mut out = OutputDir::create(&root)?;
            let text = cfg.to_toml()?;
            out.write("config.resolved.toml", text.as_bytes())?;
            let outcome: Outcome = scenario::execute(&cfg, &space, &mut out)?;
            let resolved = serde_json::to_value(&cfg)?;
            (Some(cfg), resolved, outcome, out)
        }
    };

    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.as_ref().map(|c| serde_json::to_value(c.scenario)).transpose()?.unwrap_or(json!("verify")),
        "config": resolved,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
        "passed": outcome.passed,
        "summary": outcome.summary,
        "files": out.files(),
    });
    let root = out.root().to_path_buf();
    out.finish(&manifest)?;
    println!(
        "{}: {} ({})",
        manifest["scenario"].as_str().unwrap_or("run"),
        if outcome.passed { "passed" } else { "negative result" },
        root.display()
    );
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
