use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::forcing::{ControlPath, NoiseModel};
use crate::integrators::{integrate_skeleton, IntegratorConfig, Stepper, Trajectory};
use crate::spectral::{norm_s_sq, SpectralState};

use super::EventSpec;

/// Terminal-event control problem for the skeleton equation:
/// minimize ½∫|h|² dt + penalty · dist²(Y_h(T), event).
#[derive(Debug)]
pub struct SkeletonProblem<'a> {
    pub dynamics: &'a Dynamics,
    pub noise: &'a NoiseModel,
    pub y0: SpectralState,
    pub event: EventSpec,
    pub horizon: f64,
    pub dt: f64,
    /// Number of piecewise-constant control intervals.
    pub intervals: usize,
}

/// Objective, its exact discrete gradient in h, and the terminal state.
#[derive(Clone, Debug)]
pub struct GradientEvaluation {
    pub objective: f64,
    pub action: f64,
    pub event_residual: f64,
    pub gradient: ControlPath,
    pub terminal: Vec<f64>,
}

impl<'a> SkeletonProblem<'a> {
    pub fn new(
        dynamics: &'a Dynamics,
        noise: &'a NoiseModel,
        y0: SpectralState,
        event: EventSpec,
        horizon: f64,
        dt: f64,
        intervals: usize,
    ) -> Result<Self> {
        let p = Self {
            dynamics,
            noise,
            y0,
            event,
            horizon,
            dt,
            intervals,
        };
        let steps = p.config().steps()?;
        if intervals == 0 || steps % intervals != 0 {
            return Err(Error::InvalidArgument(format!(
                "{intervals} control intervals do not divide {steps} steps"
            )));
        }
        if noise.is_empty() {
            return Err(Error::InvalidArgument("control problem needs noise channels".into()));
        }
        Ok(p)
    }

    pub fn config(&self) -> IntegratorConfig {
        IntegratorConfig::new(self.horizon, self.dt)
    }

    pub fn zero_control(&self) -> ControlPath {
        ControlPath::zeros(self.horizon, self.intervals, self.noise.len()).expect("valid grid")
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn check(&self, h: &ControlPath) -> Result<()> {
        if h.intervals() != self.intervals || h.channels() != self.noise.len() {
            return Err(Error::DimensionMismatch {
                expected: self.intervals * self.noise.len(),
                got: h.values().len(),
            });
        }
        Ok(())
    }

    /// All states Y_0 … Y_K of the skeleton run under h.
    pub fn forward(&self, stepper: &Stepper, h: &ControlPath) -> Result<Vec<Vec<f64>>> {
        self.check(h)?;
        let steps = self.steps();
        let per = steps / self.intervals;
        let ev = self.dynamics.basis().eigenvalues();
        let mut states = Vec::with_capacity(steps + 1);
        states.push(self.y0.coeffs().to_vec());
        let mut u = vec![0.0; self.noise.len()];
        let mut next = vec![0.0; self.y0.coeffs().len()];
        for k in 0..steps {
            for (ui, hi) in u.iter_mut().zip(h.value(k / per)) {
                *ui = hi * self.dt;
            }
            stepper.step_into(&states[k], Some((self.noise, &u)), &mut next);
            let v = norm_s_sq(ev, &next, 1.0).sqrt();
            if !v.is_finite() || v > 1e6 {
                return Err(Error::BlowUp {
                    time: (k + 1) as f64 * self.dt,
                    norm: v,
                    ceiling: 1e6,
                });
            }
            states.push(next.clone());
        }
        Ok(states)
    }

    /// J(h) without the gradient.
    pub fn objective(&self, h: &ControlPath, penalty: f64) -> Result<f64> {
        let stepper = Stepper::new(self.dynamics, self.dt)?;
        let states = self.forward(&stepper, h)?;
        let last = states.last().expect("nonempty");
        Ok(h.action() + penalty * self.event.distance(last).powi(2))
    }

    /// Gradient of J by a backward sweep through the transposed step map.
    pub fn adjoint_gradient(&self, h: &ControlPath, penalty: f64) -> Result<GradientEvaluation> {
        let stepper = Stepper::new(self.dynamics, self.dt)?;
        self.adjoint_gradient_with(&stepper, h, penalty)
    }

    pub fn adjoint_gradient_with(
        &self,
        stepper: &Stepper,
        h: &ControlPath,
        penalty: f64,
    ) -> Result<GradientEvaluation> {
        self.adjoint_gradient_shifted(stepper, h, penalty, 0.0)
    }

    /// As [`Self::adjoint_gradient_with`] for the penalty term
    /// penalty · max(0, g(Y_T) + shift)², the augmented-Lagrangian form.
    /// `event_residual` stays the unshifted distance.
    pub fn adjoint_gradient_shifted(
        &self,
        stepper: &Stepper,
        h: &ControlPath,
        penalty: f64,
        shift: f64,
    ) -> Result<GradientEvaluation> {
        let states = self.forward(stepper, h)?;
        let steps = states.len() - 1;
        let per = steps / self.intervals;
        let n = states[0].len();
        let terminal = states[steps].clone();
        let dist = self.event.distance(&terminal);
        let shifted = self.event.shifted_distance(&terminal, shift);

        let mut grad = self.zero_control();
        let mut lam = vec![0.0; n];
        self.event.shifted_distance_sq_gradient_into(&terminal, shift, penalty, &mut lam);
        let mut mu = vec![0.0; n];
        let mut u = vec![0.0; self.noise.len()];
        for k in (0..steps).rev() {
            let c = k / per;
            mu.copy_from_slice(&lam);
            stepper.solve(&mut mu);
            self.noise.transpose_into(&states[k], &mu, self.dt, grad.value_mut(c));
            lam.copy_from_slice(&mu);
            self.dynamics
                .explicit_tendency_transpose_into(&states[k], &mu, self.dt, &mut lam);
            for (ui, hi) in u.iter_mut().zip(h.value(c)) {
                *ui = hi * self.dt;
            }
            self.noise.state_derivative_transpose_into(&u, &mu, 1.0, &mut lam);
        }
        let w = h.interval_len();
        for (g, v) in grad.values_mut().iter_mut().zip(h.values()) {
            *g += v * w;
        }
        let action = h.action();
        Ok(GradientEvaluation {
            objective: action + penalty * shifted * shifted,
            action,
            event_residual: dist,
            gradient: grad,
            terminal,
        })
    }

    /// The skeleton trajectory for h, through the public integrator.
    pub fn trajectory(&self, h: &ControlPath) -> Result<Trajectory> {
        integrate_skeleton(self.dynamics, &self.y0, h, self.noise, &self.config())
    }
}
