use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ControlPath;
use crate::spectral::{norm_s_sq, BasisSet, SpectralState};

/// Monitored quantities of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub time: f64,
    /// |Y|²
    pub l2_sq: f64,
    /// ‖Y‖²
    pub v_sq: f64,
    /// ‖Y‖₂²
    pub da_sq: f64,
    /// |(G(Y), Y)|
    pub g_energy: f64,
    /// Residual of the discrete energy identity over the step ending here.
    pub energy_residual: f64,
    /// ∫₀ᵗ ‖Y‖² ds
    pub int_v_sq: f64,
    /// ∫₀ᵗ ‖Y‖₂² ds
    pub int_da_sq: f64,
    /// |Y|² + 2κ∫‖Y‖²
    pub energy: f64,
    /// Gronwall envelope for `energy`.
    pub envelope: f64,
}

/// Per-step bound records with running integrals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    pub records: Vec<LedgerRecord>,
}

impl BoundLedger {
    pub const HEADER: &'static str =
        "time,l2_sq,v_sq,da_sq,g_energy,energy_residual,int_v_sq,int_da_sq,energy,envelope";

    /// Σ |residual_k| dt over the run.
    pub fn summed_residual(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].energy_residual.abs() * (w[1].time - w[0].time))
            .sum()
    }

    /// sup_t |Y|² + ∫₀ᵀ ‖Y‖² ds.
    pub fn energy_bound(&self) -> f64 {
        let sup = self.records.iter().fold(0.0, |a: f64, r| a.max(r.l2_sq));
        sup + self.records.last().map_or(0.0, |r| r.int_v_sq)
    }

    /// Largest energy / envelope ratio; ≤ 1 when the envelope holds.
    pub fn envelope_ratio(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.envelope > 0.0)
            .fold(0.0, |a: f64, r| a.max(r.energy / r.envelope))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.records {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.time,
                r.l2_sq,
                r.v_sq,
                r.da_sq,
                r.g_energy,
                r.energy_residual,
                r.int_v_sq,
                r.int_da_sq,
                r.energy,
                r.envelope
            )?;
        }
        Ok(())
    }
}

/// Stored states at uniform spacing plus the bound ledger.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<SpectralState>,
    /// Spacing of stored states.
    pub dt: f64,
    /// Integrator step.
    pub step_dt: f64,
    pub ledger: BoundLedger,
    pub epsilon: f64,
    pub control: Option<ControlPath>,
    pub seed: Option<u64>,
}

/// Reproducibility header for a serialized trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub version: u32,
    pub n_h: usize,
    pub n_z: usize,
    pub dt: f64,
    pub step_dt: f64,
    pub horizon: f64,
    pub stored_states: usize,
    pub epsilon: f64,
    pub seed: Option<u64>,
}

impl Trajectory {
    /// Trajectory from states at spacing dt (no ledger).
    pub fn from_states(states: Vec<SpectralState>, dt: f64) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
        for s in &states {
            first.same_basis(s)?;
        }
        Ok(Self {
            states,
            dt,
            step_dt: dt,
            ledger: BoundLedger::default(),
            epsilon: 0.0,
            control: None,
            seed: None,
        })
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        self.states[0].basis()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.states.len() - 1) as f64
    }

    pub fn final_state(&self) -> &SpectralState {
        self.states.last().expect("nonempty trajectory")
    }

    /// Coefficient-wise difference self − other on identical time grids.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.states.len() != other.states.len() || self.dt != other.dt {
            return Err(Error::DimensionMismatch {
                expected: self.states.len(),
                got: other.states.len(),
            });
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| {
                let mut d = a.clone();
                d.axpy(-1.0, b)?;
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(states, self.dt)
    }

    /// sup_t |Y(t)|² over stored states.
    pub fn sup_l2_sq(&self) -> f64 {
        self.states.iter().fold(0.0, |a, s| a.max(s.l2_norm().powi(2)))
    }

    /// sup_t ‖Y(t)‖² over stored states.
    pub fn sup_v_sq(&self) -> f64 {
        self.states.iter().fold(0.0, |a, s| a.max(s.v_norm().powi(2)))
    }

    pub fn manifest(&self) -> TrajectoryManifest {
        TrajectoryManifest {
            version: 1,
            n_h: self.basis().n_h(),
            n_z: self.basis().n_z(),
            dt: self.dt,
            step_dt: self.step_dt,
            horizon: self.horizon(),
            stored_states: self.states.len(),
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }

    /// One row per stored state: time then every coefficient.
    pub fn write_states_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "time")?;
        for k in 0..self.basis().len() {
            write!(w, ",c{k}")?;
        }
        writeln!(w)?;
        for s in &self.states {
            write!(w, "{:?}", s.time)?;
            for c in s.coeffs() {
                write!(w, ",{c:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_states_csv<R: BufRead>(basis: &Arc<BasisSet>, r: R, dt: f64) -> Result<Self> {
        let mut states = Vec::new();
        for (row, line) in r.lines().enumerate().skip(1) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::Parse(format!("row {row}: {e}"))))
                .collect::<Result<_>>()?;
            let (t, c) = cells
                .split_first()
                .ok_or_else(|| Error::Parse(format!("row {row} empty")))?;
            states.push(SpectralState::from_coeffs(basis, c.to_vec())?.with_time(*t));
        }
        Self::from_states(states, dt)
    }
}

/// |Y|²_ℜ = sup_t ‖Y(t)‖² + ∫₀ᵀ ‖Y(t)‖₂² dt (trapezoidal in time).
pub fn re_norm(traj: &Trajectory) -> f64 {
    let ev = traj.basis().eigenvalues();
    let mut sup: f64 = 0.0;
    let mut int = 0.0;
    let mut prev: Option<f64> = None;
    for s in &traj.states {
        sup = sup.max(norm_s_sq(ev, s.coeffs(), 1.0));
        let da = norm_s_sq(ev, s.coeffs(), 2.0);
        if let Some(p) = prev {
            int += 0.5 * (p + da) * traj.dt;
        }
        prev = Some(da);
    }
    sup + int
}

/// Discrete ∫|u|² dt + ∫∫ |u(t) − u(s)|² / |t − s|^{1+2α} dt ds with the
/// diagonal left out.
pub fn holder_sobolev_norm(traj: &Trajectory, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1/2)")));
    }
    let n = traj.states.len();
    let h = traj.dt;
    let w = |k: usize| if n > 1 && (k == 0 || k == n - 1) { 0.5 * h } else { h };
    let sq: f64 = (0..n).map(|k| w(k) * traj.states[k].l2_norm().powi(2)).sum();
    let mut double = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d: f64 = traj.states[i]
                .coeffs()
                .iter()
                .zip(traj.states[j].coeffs())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let gap = (i as f64 - j as f64).abs() * h;
            double += w(i) * w(j) * d / gap.powf(1.0 + 2.0 * alpha);
        }
    }
    Ok(sq + double)
}
