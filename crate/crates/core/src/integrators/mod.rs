//! First-order IMEX time stepping.
//!
//! One step maps Y_k to Y_{k+1} = S(Y_k + dt·(−B(Y_k,Y_k) − G₀(Y_k)) + ψ(Y_k)·u_k),
//! where S solves (I + dt·κA)Y + ∇p_b = r with the barotropic velocity of
//! the result discretely divergence-free, and u_k is h_k·dt for the skeleton
//! equation or √ε·ΔW_k for the stochastic system. S is symmetric.

mod trajectory;

use serde::{Deserialize, Serialize};

pub use trajectory::{
    holder_sobolev_norm, re_norm, BoundLedger, LedgerRecord, Trajectory, TrajectoryManifest,
};

use crate::dynamics::{Dynamics, StokesSolver};
use crate::error::{Error, Result};
use crate::forcing::{path_rng, ControlPath, NoiseModel};
use crate::spectral::{dot, norm_s_sq, SpectralState};
use rand::Rng;
use rand_distr::StandardNormal;

/// Time grid and monitoring options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Keep every `store_stride`-th state.
    #[serde(default = "one")]
    pub store_stride: usize,
    /// Abort when ‖Y‖ exceeds this.
    #[serde(default = "default_ceiling")]
    pub blowup_ceiling: f64,
    /// Fill the bound ledger.
    #[serde(default = "yes")]
    pub monitor: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_ceiling() -> f64 {
    1e6
}

impl IntegratorConfig {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self {
            horizon,
            dt,
            store_stride: 1,
            blowup_ceiling: default_ceiling(),
            monitor: true,
        }
    }

    /// dt ≤ 0.5 / (κ μ_max), shrunk so it divides the horizon.
    pub fn auto(dynamics: &Dynamics, horizon: f64) -> Self {
        let rate = dynamics.physics().diffusion_scale * dynamics.basis().max_eigenvalue();
        let steps = (horizon * rate / 0.5).ceil().max(1.0);
        Self::new(horizon, horizon / steps)
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt {} must be positive", self.dt)));
        }
        if self.store_stride == 0 {
            return Err(Error::InvalidArgument("store_stride must be ≥ 1".into()));
        }
        let n = (self.horizon / self.dt).round();
        if n < 1.0 || (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::InvalidArgument(format!(
                "dt = {} does not divide T = {}",
                self.dt, self.horizon
            )));
        }
        let n = n as usize;
        if !n.is_multiple_of(self.store_stride) {
            return Err(Error::InvalidArgument(format!(
                "store_stride {} does not divide {n} steps",
                self.store_stride
            )));
        }
        Ok(n)
    }
}

/// The step map with its cached implicit solve.
#[derive(Debug)]
pub struct Stepper<'a> {
    dynamics: &'a Dynamics,
    dt: f64,
    solver: StokesSolver,
}

impl<'a> Stepper<'a> {
    pub fn new(dynamics: &'a Dynamics, dt: f64) -> Result<Self> {
        let solver = StokesSolver::new(
            dynamics.basis(),
            dynamics.pressure(),
            dt,
            dynamics.physics().diffusion_scale,
        )?;
        Ok(Self { dynamics, dt, solver })
    }

    pub fn dynamics(&self) -> &'a Dynamics {
        self.dynamics
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Applies the symmetric implicit solve S in place.
    pub fn solve(&self, r: &mut [f64]) {
        self.solver.apply(r);
    }

    /// out = S(y + dt·F(y) + ψ(y)·u). A zero or absent u is skipped so the
    /// result is bit-identical to the unforced step.
    pub fn step_into(&self, y: &[f64], forcing: Option<(&NoiseModel, &[f64])>, out: &mut [f64]) {
        out.copy_from_slice(y);
        self.dynamics.explicit_tendency_into(y, self.dt, out);
        if let Some((noise, u)) = forcing {
            if u.iter().any(|&v| v != 0.0) {
                noise.apply_into(y, u, 1.0, out);
            }
        }
        self.solver.apply(out);
    }
}

fn check_finite(y: &[f64], ev: &[f64], time: f64, ceiling: f64) -> Result<()> {
    let v = norm_s_sq(ev, y, 1.0).sqrt();
    if !v.is_finite() || v > ceiling {
        return Err(Error::BlowUp {
            time,
            norm: v,
            ceiling,
        });
    }
    Ok(())
}

/// Envelope parameters: d E ≤ (β₀ + β₁|h|) E + α₁|h|.
struct Envelope {
    beta0: f64,
    c_psi: f64,
    log_growth: f64,
    source: f64,
}

impl Envelope {
    fn new(dynamics: &Dynamics, noise: Option<&NoiseModel>) -> Self {
        Self {
            beta0: dynamics.baroclinic_norm(),
            c_psi: noise.map_or(0.0, |n| n.sigma_max()),
            log_growth: 0.0,
            source: 0.0,
        }
    }

    fn advance(&mut self, h_norm: f64, dt: f64) -> f64 {
        self.log_growth += (self.beta0 + 3.0 * self.c_psi * h_norm) * dt;
        self.source += self.c_psi * h_norm * dt;
        self.log_growth
    }
}

struct Monitor<'a> {
    dynamics: &'a Dynamics,
    ledger: BoundLedger,
    envelope: Envelope,
    e0: f64,
}

impl<'a> Monitor<'a> {
    fn new(dynamics: &'a Dynamics, noise: Option<&NoiseModel>, y0: &[f64]) -> Self {
        let ev = dynamics.basis().eigenvalues();
        let l2 = dot(y0, y0);
        let rec = LedgerRecord {
            time: 0.0,
            l2_sq: l2,
            v_sq: norm_s_sq(ev, y0, 1.0),
            da_sq: norm_s_sq(ev, y0, 2.0),
            g_energy: dynamics.g_energy(y0).abs(),
            energy_residual: 0.0,
            int_v_sq: 0.0,
            int_da_sq: 0.0,
            energy: l2,
            envelope: l2,
        };
        Self {
            dynamics,
            ledger: BoundLedger { records: vec![rec] },
            envelope: Envelope::new(dynamics, noise),
            e0: l2,
        }
    }

    /// Records the step y → y_next, where `forcing_dot` = (ψ(y)u, y) and
    /// `h_norm` = |u|/dt.
    fn record(&mut self, time: f64, dt: f64, y: &[f64], y_next: &[f64], forcing_dot: f64, h_norm: f64) {
        let ev = self.dynamics.basis().eigenvalues();
        let kappa = self.dynamics.physics().diffusion_scale;
        let prev = *self.ledger.records.last().expect("initial record");
        let l2 = dot(y_next, y_next);
        let v_sq = norm_s_sq(ev, y_next, 1.0);
        let da_sq = norm_s_sq(ev, y_next, 2.0);
        let g_prev = self.dynamics.g_energy(y);
        let residual =
            (l2 - prev.l2_sq) / dt + 2.0 * kappa * v_sq + 2.0 * g_prev - 2.0 * forcing_dot / dt;
        // right-endpoint sums: the implicit solve dissipates with the new state
        let int_v_sq = prev.int_v_sq + v_sq * dt;
        let int_da_sq = prev.int_da_sq + da_sq * dt;
        let growth = self.envelope.advance(h_norm, dt);
        self.ledger.records.push(LedgerRecord {
            time,
            l2_sq: l2,
            v_sq,
            da_sq,
            g_energy: self.dynamics.g_energy(y_next).abs(),
            energy_residual: residual,
            int_v_sq,
            int_da_sq,
            energy: l2 + 2.0 * kappa * int_v_sq,
            envelope: (self.e0 + self.envelope.source) * growth.exp(),
        });
    }
}

/// Source of the per-step forcing increment u_k.
enum Drive<'a, R: Rng> {
    None,
    Control(&'a ControlPath),
    Noise { sqrt_eps: f64, rng: R },
}

struct Run {
    traj: Trajectory,
    increments: Vec<Vec<f64>>,
    path: Vec<Vec<f64>>,
}

fn run<R: Rng>(
    dynamics: &Dynamics,
    y0: &SpectralState,
    noise: Option<&NoiseModel>,
    mut drive: Drive<'_, R>,
    cfg: &IntegratorConfig,
    record: bool,
) -> Result<Run> {
    if !std::sync::Arc::ptr_eq(y0.basis(), dynamics.basis()) {
        return Err(Error::BasisMismatch);
    }
    if let Some(n) = noise {
        if !std::sync::Arc::ptr_eq(n.basis(), dynamics.basis()) {
            return Err(Error::BasisMismatch);
        }
    }
    let steps = cfg.steps()?;
    let dt = cfg.dt;
    if let Drive::Control(h) = &drive {
        let nm = noise.ok_or_else(|| Error::InvalidArgument("control needs a noise model".into()))?;
        if h.channels() != nm.len() {
            return Err(Error::DimensionMismatch {
                expected: nm.len(),
                got: h.channels(),
            });
        }
        if (h.horizon() - cfg.horizon).abs() > 1e-9 * cfg.horizon || steps % h.intervals() != 0 {
            return Err(Error::InvalidArgument(format!(
                "control grid of {} intervals on [0, {}] does not align with {steps} steps",
                h.intervals(),
                h.horizon()
            )));
        }
    }
    let stepper = Stepper::new(dynamics, dt)?;
    let ev = dynamics.basis().eigenvalues();
    let basis = dynamics.basis();
    let n = basis.len();
    let channels = noise.map_or(0, |m| m.len());

    let mut y = y0.coeffs().to_vec();
    let mut next = vec![0.0; n];
    let mut u = vec![0.0; channels];
    let mut states = vec![SpectralState::from_coeffs(basis, y.clone())?];
    let mut monitor = cfg.monitor.then(|| Monitor::new(dynamics, noise, &y));
    let mut increments = Vec::new();
    let mut path = Vec::new();
    let mut scratch = vec![0.0; n];

    for k in 0..steps {
        let active = match &mut drive {
            Drive::None => false,
            Drive::Control(h) => {
                let per = steps / h.intervals();
                for (ui, hi) in u.iter_mut().zip(h.value(k / per)) {
                    *ui = hi * dt;
                }
                true
            }
            Drive::Noise { sqrt_eps, rng } => {
                let s = dt.sqrt();
                for ui in u.iter_mut() {
                    *ui = s * rng.sample::<f64, _>(StandardNormal);
                }
                if record {
                    increments.push(u.clone());
                    path.push(y.clone());
                }
                for ui in u.iter_mut() {
                    *ui *= *sqrt_eps;
                }
                *sqrt_eps != 0.0
            }
        };
        let forcing = match (active, noise) {
            (true, Some(nm)) => Some((nm, &u[..])),
            _ => None,
        };
        stepper.step_into(&y, forcing, &mut next);
        let time = (k + 1) as f64 * dt;
        check_finite(&next, ev, time, cfg.blowup_ceiling)?;
        if let Some(m) = monitor.as_mut() {
            let (fdot, hn) = match forcing {
                Some((nm, u)) => {
                    scratch.iter_mut().for_each(|c| *c = 0.0);
                    nm.apply_into(&y, u, 1.0, &mut scratch);
                    (dot(&scratch, &y), dot(u, u).sqrt() / dt)
                }
                None => (0.0, 0.0),
            };
            m.record(time, dt, &y, &next, fdot, hn);
        }
        std::mem::swap(&mut y, &mut next);
        if (k + 1) % cfg.store_stride == 0 {
            states.push(SpectralState::from_coeffs(basis, y.clone())?.with_time(time));
        }
    }

    let traj = Trajectory {
        states,
        dt: dt * cfg.store_stride as f64,
        step_dt: dt,
        ledger: monitor.map(|m| m.ledger).unwrap_or_default(),
        epsilon: 0.0,
        control: None,
        seed: None,
    };
    Ok(Run {
        traj,
        increments,
        path,
    })
}

type NoRng = rand_chacha::ChaCha8Rng;

/// Unforced system dY + κAY + B(Y,Y) + G(Y) = 0.
pub fn integrate_deterministic(
    dynamics: &Dynamics,
    y0: &SpectralState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    Ok(run::<NoRng>(dynamics, y0, None, Drive::None, cfg, false)?.traj)
}

/// Skeleton equation dY + (κAY + B + G) dt = ψ(Y) h dt.
pub fn integrate_skeleton(
    dynamics: &Dynamics,
    y0: &SpectralState,
    h: &ControlPath,
    noise: &NoiseModel,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut t = run::<NoRng>(dynamics, y0, Some(noise), Drive::Control(h), cfg, false)?.traj;
    t.control = Some(h.clone());
    Ok(t)
}

/// Wiener increments and pre-step states of a stochastic run.
#[derive(Clone, Debug)]
pub struct DrivingRecord {
    /// Unscaled ΔW_k, one vector per step.
    pub increments: Vec<Vec<f64>>,
    /// Y_k before step k.
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

/// Euler–Maruyama for dY + (κAY + B + G) dt = √ε ψ(Y) dW; path stream 0.
pub fn integrate_stochastic(
    dynamics: &Dynamics,
    y0: &SpectralState,
    epsilon: f64,
    noise: &NoiseModel,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<Trajectory> {
    integrate_stochastic_path(dynamics, y0, epsilon, noise, cfg, seed, 0, false).map(|r| r.0)
}

/// As [`integrate_stochastic`] on stream `path`, optionally recording the
/// driving noise and pre-step states.
#[allow(clippy::too_many_arguments)]
pub fn integrate_stochastic_path(
    dynamics: &Dynamics,
    y0: &SpectralState,
    epsilon: f64,
    noise: &NoiseModel,
    cfg: &IntegratorConfig,
    seed: u64,
    path: u64,
    record: bool,
) -> Result<(Trajectory, Option<DrivingRecord>)> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be ≥ 0")));
    }
    let drive = Drive::Noise {
        sqrt_eps: epsilon.sqrt(),
        rng: path_rng(seed, path),
    };
    let r = run(dynamics, y0, Some(noise), drive, cfg, record)?;
    let mut t = r.traj;
    t.epsilon = epsilon;
    t.seed = Some(seed);
    let rec = record.then_some(DrivingRecord {
        increments: r.increments,
        states: r.path,
        dt: cfg.dt,
    });
    Ok((t, rec))
}

/// Auxiliary linear process dZ + κAZ dt = √ε ψ(Ȳ) dW, Z(0) = 0, driven by a
/// recorded noise path and state path.
pub fn integrate_z(
    dynamics: &Dynamics,
    epsilon: f64,
    driving: &DrivingRecord,
    noise: &NoiseModel,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    if driving.increments.len() != steps || driving.states.len() != steps {
        return Err(Error::DimensionMismatch {
            expected: steps,
            got: driving.increments.len().min(driving.states.len()),
        });
    }
    if (driving.dt - cfg.dt).abs() > 1e-15 * cfg.dt {
        return Err(Error::InvalidArgument("driving record uses a different dt".into()));
    }
    let basis = dynamics.basis();
    let stepper = Stepper::new(dynamics, cfg.dt)?;
    let s = epsilon.sqrt();
    let mut z = vec![0.0; basis.len()];
    let mut states = vec![SpectralState::zeros(basis)];
    for k in 0..steps {
        if s != 0.0 {
            noise.apply_into(&driving.states[k], &driving.increments[k], s, &mut z);
        }
        stepper.solve(&mut z);
        let time = (k + 1) as f64 * cfg.dt;
        check_finite(&z, basis.eigenvalues(), time, cfg.blowup_ceiling)?;
        if (k + 1) % cfg.store_stride == 0 {
            states.push(SpectralState::from_coeffs(basis, z.clone())?.with_time(time));
        }
    }
    let mut t = Trajectory::from_states(states, cfg.dt * cfg.store_stride as f64)?;
    t.step_dt = cfg.dt;
    t.epsilon = epsilon;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Physics;
    use crate::forcing::Growth;
    use crate::spectral::{build_basis, Field, ModeIndex};
    use std::f64::consts::PI;

    #[test]
    fn zero_is_an_equilibrium() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let t = integrate_deterministic(&d, &SpectralState::zeros(&b), &IntegratorConfig::new(0.1, 0.01)).unwrap();
        assert!(t.states.iter().all(|s| s.l2_norm() == 0.0));
        assert_eq!(t.states.len(), 11);
    }

    #[test]
    fn linear_single_mode_matches_implicit_factor() {
        let b = build_basis(1, 0).unwrap();
        let d = Dynamics::new(&b, Physics::linear()).unwrap();
        let m = ModeIndex::new(Field::Temp, 1, 0, 0).unwrap();
        let y0 = SpectralState::single_mode(&b, m, 1.0).unwrap();
        let dt = 1e-3;
        let t = integrate_deterministic(&d, &y0, &IntegratorConfig::new(0.1, dt)).unwrap();
        let mu = PI * PI;
        let p = b.position(&m).unwrap();
        let got = t.final_state().coeffs()[p];
        assert!((got - (1.0 + dt * mu).powi(-100)).abs() < 1e-12);
        assert!((got - (-mu * 0.1f64).exp()).abs() < 0.01);
    }

    #[test]
    fn rejects_misaligned_grids() {
        let b = build_basis(1, 0).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y0 = SpectralState::zeros(&b);
        assert!(integrate_deterministic(&d, &y0, &IntegratorConfig::new(1.0, 0.3)).is_err());
        let nm = NoiseModel::default_family(&b, 1.0, 1.5, Growth::Additive).unwrap();
        let h = ControlPath::zeros(1.0, 3, nm.len()).unwrap();
        assert!(integrate_skeleton(&d, &y0, &h, &nm, &IntegratorConfig::new(1.0, 0.1)).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let b = build_basis(1, 0).unwrap();
        let d = Dynamics::new(&b, Physics::linear()).unwrap();
        let nm = NoiseModel::default_family(&b, 1.0, 0.0, Growth::Additive).unwrap();
        let h = ControlPath::constant(1.0, 10, &vec![1e9; nm.len()]).unwrap();
        let r = integrate_skeleton(&d, &SpectralState::zeros(&b), &h, &nm, &IntegratorConfig::new(1.0, 0.1));
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn ledger_integrals_nondecreasing_and_enveloped() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let mut rng = path_rng(1, 0);
        let mut y0 = SpectralState::random_smooth(&b, 0.5, 2.0, &mut rng);
        d.project(&mut y0).unwrap();
        let nm = NoiseModel::default_family(&b, 1.0, 1.5, Growth::Multiplicative).unwrap();
        let h = ControlPath::constant(0.5, 5, &vec![0.3; nm.len()]).unwrap();
        let t = integrate_skeleton(&d, &y0, &h, &nm, &IntegratorConfig::new(0.5, 0.005)).unwrap();
        let r = &t.ledger.records;
        assert_eq!(r.len(), 101);
        assert!(r.windows(2).all(|w| w[1].int_v_sq >= w[0].int_v_sq && w[1].int_da_sq >= w[0].int_da_sq));
        assert!(t.ledger.envelope_ratio() <= 1.0);
        assert!(t.states.iter().all(|s| d.constraint_residual(s) < 1e-12));
    }

    #[test]
    fn stride_thins_storage() {
        let b = build_basis(1, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let mut cfg = IntegratorConfig::new(1.0, 0.01);
        cfg.store_stride = 10;
        let t = integrate_deterministic(&d, &SpectralState::zeros(&b), &cfg).unwrap();
        assert_eq!(t.states.len(), 11);
        assert!((t.dt - 0.1).abs() < 1e-15);
    }

    #[test]
    fn z_vanishes_without_noise() {
        let b = build_basis(1, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let nm = NoiseModel::default_family(&b, 1.0, 1.5, Growth::Additive).unwrap();
        let cfg = IntegratorConfig::new(0.1, 0.01);
        let (_, rec) = integrate_stochastic_path(&d, &SpectralState::zeros(&b), 0.1, &nm, &cfg, 3, 0, true).unwrap();
        let z = integrate_z(&d, 0.0, rec.as_ref().unwrap(), &nm, &cfg).unwrap();
        assert!(z.states.iter().all(|s| s.l2_norm() == 0.0));
        let short = DrivingRecord { increments: vec![], states: vec![], dt: 0.01 };
        assert!(integrate_z(&d, 0.1, &short, &nm, &cfg).is_err());
    }
}
