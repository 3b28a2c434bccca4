//! Named experiment setups.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dynamics::{Dynamics, Physics};
use crate::error::Result;
use crate::forcing::{Growth, NoiseModel};
use crate::spectral::{build_basis, BasisSet, Field, ModeIndex, SpectralState};

/// Single-mode linear system dy = −μ y dt + σ dW on the velocity mode
/// (1,1,0) at N_h = 1, N_z = 0, with the diffusion rescaled so that μ is the
/// decay rate. B and G are switched off.
pub struct ScalarTestbed {
    pub basis: Arc<BasisSet>,
    pub dynamics: Dynamics,
    pub noise: NoiseModel,
    pub mode: ModeIndex,
    pub position: usize,
    pub mu: f64,
    pub sigma: f64,
}

impl ScalarTestbed {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let basis = build_basis(1, 0)?;
        let mode = ModeIndex::new(Field::V1, 1, 1, 0)?;
        let physics = Physics {
            diffusion_scale: mu / (2.0 * PI * PI),
            ..Physics::linear()
        };
        let dynamics = Dynamics::new(&basis, physics)?;
        let noise = NoiseModel::single(&basis, mode, sigma, Growth::Additive)?;
        let position = basis.position(&mode).expect("mode in basis");
        Ok(Self {
            basis,
            dynamics,
            noise,
            mode,
            position,
            mu,
            sigma,
        })
    }

    /// State with coefficient `a` on the mode.
    pub fn state(&self, a: f64) -> SpectralState {
        SpectralState::single_mode(&self.basis, self.mode, a).expect("mode in basis")
    }

    /// V-norm of a unit coefficient on the mode.
    pub fn v_scale(&self) -> f64 {
        self.mode.eigenvalue().sqrt()
    }

    /// Continuous minimum action to reach y(T) = a from 0:
    /// a²μ / (σ²(1 − e^{−2μT})).
    pub fn exact_action(&self, a: f64, horizon: f64) -> f64 {
        a * a * self.mu / (self.sigma * self.sigma * (1.0 - (-2.0 * self.mu * horizon).exp()))
    }

    /// Variance of y(T) per unit ε under the implicit scheme with step dt.
    pub fn discrete_variance(&self, horizon: f64, dt: f64) -> f64 {
        let steps = (horizon / dt).round() as i32;
        let q = 1.0 / (1.0 + dt * self.mu);
        (1..=steps).map(|j| q.powi(2 * j) * dt).sum::<f64>() * self.sigma * self.sigma
    }
}

/// Smooth projected initial state with coefficient scale
/// `amplitude · (1 + μ)^{−decay/2}`.
pub fn smooth_state(dynamics: &Dynamics, amplitude: f64, decay: f64, seed: u64) -> Result<SpectralState> {
    let mut rng = crate::forcing::path_rng(seed, u64::MAX);
    let mut y = SpectralState::random_smooth(dynamics.basis(), amplitude, decay, &mut rng);
    dynamics.project(&mut y)?;
    Ok(y)
}
