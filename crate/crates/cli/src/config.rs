use std::path::{Path, PathBuf};

use cgl_core::evolution::critical_exponent;
use cgl_core::{random_field, CglError, ComplexField, Domain, EvolutionParams, Forcing, ModePair, Space};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    Simulate,
    FixedPoint,
    Verify,
    Blowup,
    Certify,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Side lengths; one entry for an interval, two for a rectangle.
    pub lengths: Vec<f64>,
    /// Interior grid points per axis.
    pub points: Vec<usize>,
}

/// Coefficient of one product sine mode, 1-based `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Vec<usize>,
    #[serde(default)]
    pub u1: f64,
    #[serde(default)]
    pub u2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Eigenmodes {
        modes: Vec<ModeSpec>,
    },
    /// Seeded random field rescaled to the given L2 norm.
    Random {
        decay: f64,
        norm: f64,
        seed: Option<u64>,
    },
    /// CSV with header `u1,u2` and one row per interior grid point.
    File {
        path: PathBuf,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Eigenmodes {
            modes: vec![ModeSpec {
                k: vec![1],
                u1: 1.0,
                u2: 0.0,
            }],
        }
    }
}

/// Time-independent forcing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    #[default]
    Zero,
    Eigenmodes {
        modes: Vec<ModeSpec>,
    },
    Random {
        decay: f64,
        norm: f64,
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub fixed_point_tol: f64,
    pub max_iter: usize,
    /// Horizon of the Picard construction; the run horizon when absent.
    pub fixed_point_horizon: Option<f64>,
    pub blowup_threshold: f64,
    pub blowup_refinements: usize,
    /// Random trials per embedding-constant estimate.
    pub trials: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point_tol: 1e-12,
            max_iter: 100,
            fixed_point_horizon: None,
            blowup_threshold: 1e8,
            blowup_refinements: 6,
            trials: 200,
        }
    }
}

/// Grid of `kappa` values times initial-data amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kappa: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            kappa: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            amplitude: vec![0.01, 0.1, 1.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub domain: DomainConfig,
    #[serde(default)]
    pub params: EvolutionParams,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn core_invalid(section: &str, e: CglError) -> CliError {
    match e {
        CglError::InvalidParameter { name, reason } => invalid(&format!("{section}.{name}"), reason),
        other => invalid(section, other.to_string()),
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.display().to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| invalid("config", e.to_string()))
    }

    /// Checks every field; returns the discretization on success.
    pub fn validate(&self) -> Result<Space, CliError> {
        let d = &self.domain;
        let dim = d.lengths.len();
        if d.points.len() != dim {
            return Err(invalid(
                "domain.points",
                format!("needs one entry per side length ({dim}), got {}", d.points.len()),
            ));
        }
        if dim == 0 {
            return Err(invalid("domain.lengths", "needs at least one entry"));
        }
        // the exponent is checked against the requested dimension first, so a
        // supercritical q is reported as such even where no solver exists
        if self.params.q >= critical_exponent(dim) {
            return Err(core_invalid(
                "params",
                CglError::SupercriticalExponent {
                    q: self.params.q,
                    dim,
                    critical: critical_exponent(dim),
                },
            ));
        }
        let domain = match dim {
            1 => Domain::interval(d.lengths[0], d.points[0]),
            2 => Domain::rectangle(d.lengths[0], d.lengths[1], d.points[0], d.points[1]),
            _ => return Err(invalid("domain.lengths", format!("dimension {dim} is not supported (1 or 2)"))),
        }
        .map_err(|e| core_invalid("domain", e))?;
        self.params.validate(dim).map_err(|e| core_invalid("params", e))?;

        let t = &self.tolerances;
        if t.fixed_point_tol.is_nan() || t.fixed_point_tol <= 0.0 {
            return Err(invalid("tolerances.fixed_point_tol", "must be positive"));
        }
        if t.max_iter == 0 {
            return Err(invalid("tolerances.max_iter", "must be at least 1"));
        }
        if let Some(s) = t.fixed_point_horizon {
            if !(s > 0.0 && s <= self.params.horizon) {
                return Err(invalid("tolerances.fixed_point_horizon", "must lie in (0, params.horizon]"));
            }
        }
        if !(t.blowup_threshold > 0.0 && t.blowup_threshold.is_finite()) {
            return Err(invalid("tolerances.blowup_threshold", "must be positive and finite"));
        }
        if t.trials < cgl_core::estimates::MIN_TRIALS {
            return Err(invalid(
                "tolerances.trials",
                format!("must be at least {}", cgl_core::estimates::MIN_TRIALS),
            ));
        }
        let sw = &self.sweep;
        if sw.kappa.is_empty() || sw.amplitude.is_empty() {
            return Err(invalid("sweep", "kappa and amplitude grids must be non-empty"));
        }
        if let Some(k) = sw.kappa.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(invalid("sweep.kappa", format!("entries must be nonnegative, got {k}")));
        }
        if let Some(a) = sw.amplitude.iter().find(|a| !a.is_finite()) {
            return Err(invalid("sweep.amplitude", format!("entries must be finite, got {a}")));
        }

        let space = Space::new(domain);
        self.initial_field(&space)?;
        self.forcing_field(&space)?;
        Ok(space)
    }

    pub fn initial_field(&self, space: &Space) -> Result<ComplexField, CliError> {
        let u = match &self.initial {
            InitialConfig::Eigenmodes { modes } => from_mode_specs(space, modes, "initial.modes")?,
            InitialConfig::Random { decay, norm, seed } => {
                scaled_random(space, seed.unwrap_or(self.seed), *decay, *norm, "initial")?
            }
            InitialConfig::File { path } => read_field_csv(space, path)?,
        };
        if !u.is_finite() {
            return Err(invalid("initial", "initial state is not finite"));
        }
        Ok(u)
    }

    pub fn forcing_field(&self, space: &Space) -> Result<Forcing, CliError> {
        Ok(match &self.forcing {
            ForcingConfig::Zero => Forcing::Zero,
            ForcingConfig::Eigenmodes { modes } => Forcing::Constant(from_mode_specs(space, modes, "forcing.modes")?),
            ForcingConfig::Random { decay, norm, seed } => Forcing::Constant(scaled_random(
                space,
                seed.unwrap_or(self.seed.wrapping_add(1)),
                *decay,
                *norm,
                "forcing",
            )?),
        })
    }
}

fn from_mode_specs(space: &Space, modes: &[ModeSpec], path: &str) -> Result<ComplexField, CliError> {
    let d = space.domain();
    let mut m = ModePair::zeros(space.len());
    for (i, mode) in modes.iter().enumerate() {
        let here = format!("{path}[{i}].k");
        if mode.k.len() != d.dim() {
            return Err(invalid(&here, format!("needs {} indices, got {}", d.dim(), mode.k.len())));
        }
        let mut k = [0usize; 2];
        for (axis, &ki) in mode.k.iter().enumerate() {
            if ki == 0 || ki > d.resolution(axis) {
                return Err(invalid(&here, format!("index {ki} outside 1..={}", d.resolution(axis))));
            }
            k[axis] = ki;
        }
        if !(mode.u1.is_finite() && mode.u2.is_finite()) {
            return Err(invalid(&format!("{path}[{i}]"), "coefficients must be finite"));
        }
        let j = d.flat_mode(k);
        m.c1[j] += mode.u1;
        m.c2[j] += mode.u2;
    }
    Ok(ComplexField::from_modes(space, &m))
}

fn scaled_random(space: &Space, seed: u64, decay: f64, norm: f64, path: &str) -> Result<ComplexField, CliError> {
    if !(norm >= 0.0 && norm.is_finite()) {
        return Err(invalid(&format!("{path}.norm"), format!("must be nonnegative, got {norm}")));
    }
    let u = random_field(space, seed, decay).map_err(|e| core_invalid(path, e))?;
    let n = u.l2_norm();
    Ok(if n > 0.0 { u.scale(norm / n) } else { u })
}

fn read_field_csv(space: &Space, path: &Path) -> Result<ComplexField, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let at = |line: usize, msg: String| invalid(&format!("{}:{line}", path.display()), msg);
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "u1,u2" => {}
        Some((i, h)) => return Err(at(i + 1, format!("expected header `u1,u2`, found `{h}`"))),
        None => return Err(at(1, "file is empty".into())),
    }
    let (mut u1, mut u2) = (Vec::new(), Vec::new());
    for (i, line) in lines {
        let mut cols = line.split(',').map(str::trim);
        let mut next = |name: &str| -> Result<f64, CliError> {
            let cell = cols.next().ok_or_else(|| at(i + 1, format!("missing column {name}")))?;
            cell.parse::<f64>()
                .map_err(|e| at(i + 1, format!("column {name}: {e}")))
        };
        u1.push(next("u1")?);
        u2.push(next("u2")?);
    }
    ComplexField::from_vecs(space, u1, u2).map_err(|e| invalid(&path.display().to_string(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse("[domain]\nlengths = [3.0]\npoints = [16]\n").unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Simulate);
        assert_eq!(cfg.params, EvolutionParams::default());
        assert_eq!(cfg.tolerances, Tolerances::default());
        cfg.validate().unwrap();
        let echoed = parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(echoed, cfg);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let e = parse("[domain]\nlengths = [3.0]\npoints = [16]\nwidth = 2\n").unwrap_err();
        assert!(e.to_string().contains("width"), "{e}");
        let e = parse("[domain]\nlengths = [3.0]\nlengths = [2.0]\npoints = [16]\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse("[domain]\nlengths = [3.0]\npoints = [16]\n[params]\nkapa = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("kapa"), "{e}");
    }

    #[test]
    fn supercritical_exponent_in_three_dimensions() {
        let cfg = parse("[domain]\nlengths = [1.0, 1.0, 1.0]\npoints = [8, 8, 8]\n[params]\nq = 6.0\n").unwrap();
        let e = cfg.validate().unwrap_err();
        assert!(e.to_string().contains("not Sobolev subcritical"), "{e}");
        let cfg = parse("[domain]\nlengths = [1.0, 1.0, 1.0]\npoints = [8, 8, 8]\n[params]\nq = 4.0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("not supported"));
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let cfg = parse("[domain]\nlengths = [3.0]\npoints = [16]\n[params]\ndt = -1.0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().starts_with("params.dt"));
        let cfg = parse(
            "[domain]\nlengths = [3.0]\npoints = [16]\n[initial]\nkind = \"eigenmodes\"\nmodes = [{ k = [17], u1 = 1.0 }]\n",
        )
        .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().starts_with("initial.modes[0].k"));
    }

    #[test]
    fn random_initial_data_has_requested_norm() {
        let cfg = parse(
            "seed = 4\n[domain]\nlengths = [3.0]\npoints = [16]\n[initial]\nkind = \"random\"\ndecay = 1.0\nnorm = 0.5\n",
        )
        .unwrap();
        let s = cfg.validate().unwrap();
        let u = cfg.initial_field(&s).unwrap();
        assert!((u.l2_norm() - 0.5).abs() < 1e-12);
        assert_eq!(u, cfg.initial_field(&s).unwrap());
    }
}
