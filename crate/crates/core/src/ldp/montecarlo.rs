use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::forcing::{path_rng, NoiseModel};
use crate::integrators::{IntegratorConfig, Stepper};
use crate::spectral::{norm_s_sq, SpectralState};

use super::EventSpec;

/// Crude Monte Carlo estimate of P(Y^ε(T) ∈ event).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub epsilon: f64,
    pub n_paths: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub stderr: f64,
    /// −ε log p̂; +∞ with no hits.
    pub neg_eps_log_p: f64,
    /// One-sided 95% upper bound on p (rule of three with no hits).
    pub p_upper: f64,
}

/// Runs one stochastic path on stream `path` and hands every state
/// (including Y₀) to `visit`. Same arithmetic as the stochastic integrator.
#[allow(clippy::too_many_arguments)]
pub(crate) fn simulate_path<F: FnMut(&[f64])>(
    stepper: &Stepper,
    noise: &NoiseModel,
    y0: &[f64],
    epsilon: f64,
    steps: usize,
    seed: u64,
    path: u64,
    ceiling: f64,
    mut visit: F,
) -> Result<Vec<f64>> {
    let dt = stepper.dt();
    let ev = stepper.dynamics().basis().eigenvalues();
    let mut rng = path_rng(seed, path);
    let sqrt_eps = epsilon.sqrt();
    let s = dt.sqrt();
    let mut y = y0.to_vec();
    let mut next = vec![0.0; y.len()];
    let mut u = vec![0.0; noise.len()];
    visit(&y);
    for k in 0..steps {
        for ui in u.iter_mut() {
            *ui = s * rng.sample::<f64, _>(StandardNormal);
        }
        for ui in u.iter_mut() {
            *ui *= sqrt_eps;
        }
        let forcing = (sqrt_eps != 0.0).then_some((noise, &u[..]));
        stepper.step_into(&y, forcing, &mut next);
        let v = norm_s_sq(ev, &next, 1.0).sqrt();
        if !v.is_finite() || v > ceiling {
            return Err(Error::BlowUp {
                time: (k + 1) as f64 * dt,
                norm: v,
                ceiling,
            });
        }
        std::mem::swap(&mut y, &mut next);
        visit(&y);
    }
    Ok(y)
}

/// Indicator mean over `n_paths` independent paths (stream = path index).
#[allow(clippy::too_many_arguments)]
pub fn mc_rare_event(
    dynamics: &Dynamics,
    noise: &NoiseModel,
    y0: &SpectralState,
    event: &EventSpec,
    epsilon: f64,
    n_paths: usize,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<McEstimate> {
    if n_paths < 1000 {
        return Err(Error::InvalidArgument(format!("n_paths = {n_paths} < 1000")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be > 0")));
    }
    let steps = cfg.steps()?;
    let stepper = Stepper::new(dynamics, cfg.dt)?;
    let hits: Vec<bool> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let y = simulate_path(
                &stepper,
                noise,
                y0.coeffs(),
                epsilon,
                steps,
                seed,
                p,
                cfg.blowup_ceiling,
                |_| {},
            )?;
            Ok(event.contains(&y))
        })
        .collect::<Result<_>>()?;
    let hits = hits.iter().filter(|&&h| h).count();
    Ok(estimate(epsilon, n_paths, hits))
}

pub(crate) fn estimate(epsilon: f64, n: usize, hits: usize) -> McEstimate {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let stderr = (p * (1.0 - p) / nf).sqrt();
    McEstimate {
        epsilon,
        n_paths: n,
        hits,
        p_hat: p,
        stderr,
        neg_eps_log_p: if hits == 0 { f64::INFINITY } else { -epsilon * p.ln() },
        p_upper: if hits == 0 { 3.0 / nf } else { (p + 1.645 * stderr).min(1.0) },
    }
}
