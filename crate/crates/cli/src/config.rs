//! Run configuration: a versioned JSON document.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pesim_core::forcing::{ControlPath, NoiseModel, NoiseSpec};
use pesim_core::ldp::{EventSpec, OptimizerSettings};
use pesim_core::spectral::{BasisSet, Field, ModeIndex, SpectralState};
use pesim_core::dynamics::CONSTRAINT_WARN;
use pesim_core::{build_basis, Dynamics, IntegratorConfig, Physics};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Skeleton,
    MinimizeAction,
    Mc,
    Verify,
    Converge,
    Scan,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Skeleton => "skeleton",
            Mode::MinimizeAction => "minimize-action",
            Mode::Mc => "mc",
            Mode::Verify => "verify",
            Mode::Converge => "converge",
            Mode::Scan => "scan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub n_h: usize,
    pub n_z: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub store_stride: usize,
    #[serde(default = "ceiling")]
    pub blowup_ceiling: f64,
}

fn one() -> usize {
    1
}

fn ceiling() -> f64 {
    1e6
}

/// A state on the run's basis: named preset or coefficient file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Zero,
    SingleMode {
        field: Field,
        i: u32,
        j: u32,
        m: u32,
        amplitude: f64,
    },
    /// Coefficients N(0, amplitude² (1 + μ)^{−decay}), then projected.
    RandomSmooth {
        amplitude: f64,
        decay: f64,
        #[serde(default)]
        seed: u64,
    },
    /// CSV with header `field,i,j,m,coefficient`; unlisted modes are zero.
    File { path: PathBuf },
}

/// Control path for skeleton, converge and scan runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    Zero { intervals: usize },
    Constant { intervals: usize, value: Vec<f64> },
    /// CSV written by the skeleton or minimize-action modes.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventConfig {
    /// V-norm ball.
    Ball { center: StateSpec, radius: f64 },
    /// {(direction/|direction|, Y) ≥ level}.
    Halfspace { direction: StateSpec, level: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub epsilons: Vec<f64>,
    pub n_paths: usize,
    /// Also minimize the action for the I_star column.
    #[serde(default = "yes")]
    pub compute_action: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub amp: f64,
    #[serde(default)]
    pub channel: usize,
    pub n_list: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub m: f64,
    /// Random piecewise-constant controls drawn from the run seed.
    #[serde(default)]
    pub n_random: usize,
    #[serde(default = "ten")]
    pub intervals: usize,
    /// Standard deviation of the random control values.
    #[serde(default = "unit")]
    pub scale: f64,
    /// Extra controls from files.
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

fn ten() -> usize {
    10
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "samples")]
    pub samples: usize,
}

fn samples() -> usize {
    20
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { samples: samples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Optional; must agree with the mode given on the command line.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub truncation: Truncation,
    #[serde(default)]
    pub physics: Physics,
    pub noise: NoiseSpec,
    pub time: TimeSpec,
    #[serde(default = "zero_state")]
    pub initial: StateSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Noise intensity for simulate.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub control: Option<ControlSpec>,
    #[serde(default)]
    pub event: Option<EventConfig>,
    /// Control intervals for minimize-action and mc; defaults to one per step.
    #[serde(default)]
    pub intervals: Option<usize>,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub converge: Option<ConvergeSpec>,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn zero_state() -> StateSpec {
    StateSpec::Zero
}

/// Parsed configuration with the raw bytes it came from.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: Vec<u8>,
    /// Directory relative paths in the config are resolved against.
    pub base: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let raw = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config: RunConfig =
        serde_json::from_slice(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if config.version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{}: schema version {} (supported: {SCHEMA_VERSION})",
            path.display(),
            config.version
        )));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, raw, base })
}

/// Objects built from a configuration.
pub struct Setup {
    pub basis: Arc<BasisSet>,
    pub dynamics: Dynamics,
    pub noise: NoiseModel,
    pub y0: SpectralState,
    pub integrator: IntegratorConfig,
}

impl LoadedConfig {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn setup(&self) -> Result<Setup> {
        let c = &self.config;
        let cfg_err = |e: pesim_core::Error| CliError::Config(e.to_string());
        let basis = build_basis(c.truncation.n_h, c.truncation.n_z).map_err(cfg_err)?;
        let dynamics = Dynamics::new(&basis, c.physics).map_err(cfg_err)?;
        let noise = c.noise.build(&basis).map_err(cfg_err)?;
        let integrator = IntegratorConfig {
            horizon: c.time.horizon,
            dt: c.time.dt,
            store_stride: c.time.store_stride,
            blowup_ceiling: c.time.blowup_ceiling,
            monitor: true,
        };
        integrator.steps().map_err(cfg_err)?;
        if integrator.store_stride == 0 {
            return Err(CliError::Config("time.store_stride must be ≥ 1".into()));
        }
        let y0 = self.state(&c.initial, &basis, &dynamics)?;
        warn_unconstrained("initial state", &y0, &dynamics);
        Ok(Setup {
            basis,
            dynamics,
            noise,
            y0,
            integrator,
        })
    }

    pub fn state(&self, spec: &StateSpec, basis: &Arc<BasisSet>, dynamics: &Dynamics) -> Result<SpectralState> {
        let cfg_err = |e: pesim_core::Error| CliError::Config(e.to_string());
        match spec {
            StateSpec::Zero => Ok(SpectralState::zeros(basis)),
            StateSpec::SingleMode {
                field,
                i,
                j,
                m,
                amplitude,
            } => {
                let mode = ModeIndex::new(*field, *i, *j, *m).map_err(cfg_err)?;
                SpectralState::single_mode(basis, mode, *amplitude).map_err(cfg_err)
            }
            StateSpec::RandomSmooth { amplitude, decay, seed } => {
                pesim_core::presets::smooth_state(dynamics, *amplitude, *decay, *seed).map_err(cfg_err)
            }
            StateSpec::File { path } => {
                let path = self.resolve(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                parse_coefficients(&text, basis)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn control(&self, spec: &ControlSpec, channels: usize) -> Result<ControlPath> {
        let horizon = self.config.time.horizon;
        let cfg_err = |e: pesim_core::Error| CliError::Config(e.to_string());
        let h = match spec {
            ControlSpec::Zero { intervals } => ControlPath::zeros(horizon, *intervals, channels).map_err(cfg_err)?,
            ControlSpec::Constant { intervals, value } => {
                if value.len() != channels {
                    return Err(CliError::Config(format!(
                        "control value has {} entries, noise has {channels} channels",
                        value.len()
                    )));
                }
                ControlPath::constant(horizon, *intervals, value).map_err(cfg_err)?
            }
            ControlSpec::File { path } => self.control_file(path)?,
        };
        if h.channels() != channels {
            return Err(CliError::Config(format!(
                "control has {} channels, noise has {channels}",
                h.channels()
            )));
        }
        if (h.horizon() - horizon).abs() > 1e-12 * horizon {
            return Err(CliError::Config(format!(
                "control horizon {} differs from time.horizon {horizon}",
                h.horizon()
            )));
        }
        Ok(h)
    }

    pub fn control_file(&self, path: &Path) -> Result<ControlPath> {
        let path = self.resolve(path);
        let f = std::fs::File::open(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ControlPath::read_csv(std::io::BufReader::new(f))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn event(&self, basis: &Arc<BasisSet>, dynamics: &Dynamics) -> Result<EventSpec> {
        let cfg_err = |e: pesim_core::Error| CliError::Config(e.to_string());
        match &self.config.event {
            None => Err(CliError::Config("this mode needs an `event` section".into())),
            Some(EventConfig::Ball { center, radius }) => {
                let c = self.state(center, basis, dynamics)?;
                warn_unconstrained("event center", &c, dynamics);
                EventSpec::ball(c, *radius).map_err(cfg_err)
            }
            Some(EventConfig::Halfspace { direction, level }) => {
                EventSpec::halfspace(self.state(direction, basis, dynamics)?, *level).map_err(cfg_err)
            }
        }
    }
}

/// States off the discretely divergence-free space cannot be reached by the
/// dynamics; say so instead of letting the optimizer stall silently.
fn warn_unconstrained(what: &str, y: &SpectralState, dynamics: &Dynamics) {
    let r = dynamics.constraint_residual(y);
    if r > CONSTRAINT_WARN {
        log::warn!("{what} has barotropic divergence residual {r:.3e}; the constrained flow cannot reach it");
    }
}

/// Parses `field,i,j,m,coefficient` rows.
pub fn parse_coefficients(text: &str, basis: &Arc<BasisSet>) -> std::result::Result<SpectralState, String> {
    let mut y = SpectralState::zeros(basis);
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "field,i,j,m,coefficient" => {}
        _ => return Err("expected header `field,i,j,m,coefficient`".into()),
    }
    for (row, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 5 {
            return Err(format!("line {}: expected 5 cells", row + 1));
        }
        let field = match cells[0] {
            "V1" | "v1" => Field::V1,
            "V2" | "v2" => Field::V2,
            "T" | "Temp" | "temp" => Field::Temp,
            other => return Err(format!("line {}: unknown field {other:?}", row + 1)),
        };
        let idx = |s: &str| s.parse::<u32>().map_err(|e| format!("line {}: {e}", row + 1));
        let mode = ModeIndex::new(field, idx(cells[1])?, idx(cells[2])?, idx(cells[3])?).map_err(|e| e.to_string())?;
        let value: f64 = cells[4].parse().map_err(|e| format!("line {}: {e}", row + 1))?;
        if !value.is_finite() {
            return Err(format!("line {}: non-finite coefficient", row + 1));
        }
        let pos = basis
            .position(&mode)
            .ok_or_else(|| format!("line {}: mode {mode:?} outside the truncation", row + 1))?;
        y.coeffs_mut()[pos] = value;
    }
    Ok(y)
}
