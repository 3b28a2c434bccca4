use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forcing::ControlPath;
use crate::integrators::{Stepper, Trajectory};

use super::SkeletonProblem;

/// L-BFGS and augmented-Lagrangian settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    /// Iteration cap per outer round.
    pub max_iters: usize,
    /// Stop when |∇J| ≤ gtol · max(1, |z|) in whitened variables.
    pub gtol: f64,
    pub memory: usize,
    pub penalty0: f64,
    pub penalty_growth: f64,
    /// Outer rounds (multiplier and penalty updates).
    pub max_penalty_rounds: usize,
    /// Terminal event residual accepted as hitting the event.
    pub event_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iters: 300,
            gtol: 1e-8,
            memory: 10,
            penalty0: 10.0,
            penalty_growth: 10.0,
            max_penalty_rounds: 20,
            event_tol: 1e-6,
        }
    }
}

/// Outcome of a minimum-action search.
#[derive(Clone, Debug)]
pub struct ActionResult {
    pub h_star: ControlPath,
    /// ½∫|h*|²; +∞ when the event was not reached.
    pub action: f64,
    /// ½∫|h*|² of the best control found, reached or not.
    pub best_action: f64,
    pub trajectory: Trajectory,
    pub gradient_norm_final: f64,
    pub converged: bool,
    pub iterations: usize,
    pub event_residual: f64,
    pub penalty: f64,
}

struct Lbfgs {
    x: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    f: f64,
    g: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dotv(a, a).sqrt()
}

/// Limited-memory BFGS with Armijo backtracking.
fn lbfgs<F>(mut fg: F, x0: Vec<f64>, s: &OptimizerSettings) -> Result<Lbfgs>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0;
    let (mut f, mut g) = fg(&x)?;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let stop = |g: &[f64], x: &[f64]| norm(g) <= s.gtol * norm(x).max(1.0);
    while iterations < s.max_iters {
        if stop(&g, &x) {
            return Ok(Lbfgs { x, f, g, iterations, converged: true });
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (sv, yv, rho) in mem.iter().rev() {
            let a = rho * dotv(sv, &d);
            d.iter_mut().zip(yv).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        let gamma = mem
            .back()
            .map_or(1.0 / norm(&g).max(1.0), |(sv, yv, _)| dotv(sv, yv) / dotv(yv, yv));
        d.iter_mut().for_each(|di| *di *= gamma);
        for ((sv, yv, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dotv(yv, &d);
            d.iter_mut().zip(sv).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dotv(&g, &d);
        if slope >= 0.0 {
            mem.clear();
            d = g.iter().map(|v| -v / norm(&g).max(1.0)).collect();
            slope = dotv(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            match fg(&xn) {
                Ok((fn_, gn)) if fn_ <= f + 1e-4 * step * slope => {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
                Ok(_) | Err(crate::Error::BlowUp { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        let Some((xn, fn_, gn)) = accepted else {
            // no decrease possible at working precision
            let converged = stop(&g, &x);
            return Ok(Lbfgs { x, f, g, iterations, converged });
        };
        let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dotv(&sv, &yv);
        if sy > 1e-14 * norm(&sv) * norm(&yv) {
            if mem.len() == s.memory {
                mem.pop_front();
            }
            mem.push_back((sv, yv, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
    }
    let converged = stop(&g, &x);
    Ok(Lbfgs { x, f, g, iterations, converged })
}

/// Minimizes ½∫|h|² subject to Y_h(T) in the event, by L-BFGS in whitened
/// variables z = h·√Δt on the augmented Lagrangian
/// ½|z|² + penalty · max(0, g(Y_T) + λ/(2·penalty))², where g ≤ 0 is the
/// event. After each round λ ← max(0, λ + 2·penalty·g); the penalty grows
/// only when the residual fails to drop by a factor of 4.
pub fn minimize_action(problem: &SkeletonProblem, settings: &OptimizerSettings) -> Result<ActionResult> {
    minimize_action_from(problem, settings, problem.zero_control())
}

/// As [`minimize_action`], starting from `h0`.
pub fn minimize_action_from(
    problem: &SkeletonProblem,
    settings: &OptimizerSettings,
    h0: ControlPath,
) -> Result<ActionResult> {
    let stepper = Stepper::new(problem.dynamics, problem.dt)?;
    let w = h0.interval_len().sqrt();
    let template = h0.clone();
    let to_h = |z: &[f64]| {
        let mut h = template.clone();
        h.values_mut().iter_mut().zip(z).for_each(|(v, zi)| *v = zi / w);
        h
    };
    let mut z: Vec<f64> = h0.values().iter().map(|v| v * w).collect();
    let mut penalty = settings.penalty0;
    let mut multiplier = 0.0;
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    let mut last = None;
    for round in 0..settings.max_penalty_rounds.max(1) {
        let shift = multiplier / (2.0 * penalty);
        let out = lbfgs(
            |z| {
                let e = problem.adjoint_gradient_shifted(&stepper, &to_h(z), penalty, shift)?;
                Ok((e.objective, e.gradient.values().iter().map(|g| g / w).collect()))
            },
            z,
            settings,
        )?;
        iterations += out.iterations;
        z = out.x;
        let terminal = problem.forward(&stepper, &to_h(&z))?.pop().expect("terminal");
        let residual = problem.event.distance(&terminal);
        log::debug!(
            "round {round}: penalty {penalty:e}, multiplier {multiplier:e}, {} iterations, residual {residual:e}",
            out.iterations
        );
        last = Some((norm(&out.g), out.converged, residual));
        if residual <= settings.event_tol || round + 1 == settings.max_penalty_rounds {
            break;
        }
        multiplier = (multiplier + 2.0 * penalty * problem.event.signed(&terminal)).max(0.0);
        if residual > 0.25 * previous {
            penalty *= settings.penalty_growth;
        }
        previous = residual;
    }
    let (gnorm, inner_ok, residual) = last.expect("at least one round");
    let h_star = to_h(&z);
    let trajectory = problem.trajectory(&h_star)?;
    let reached = residual <= settings.event_tol;
    let best_action = h_star.action();
    Ok(ActionResult {
        action: if reached { best_action } else { f64::INFINITY },
        best_action,
        h_star,
        trajectory,
        gradient_norm_final: gnorm,
        converged: reached && inner_ok,
        iterations,
        event_residual: residual,
        penalty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let s = OptimizerSettings {
            max_iters: 500,
            gtol: 1e-10,
            ..OptimizerSettings::default()
        };
        let r = lbfgs(f, vec![-1.2, 1.0], &s).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
        assert!(r.f < 1e-15);
    }
}
