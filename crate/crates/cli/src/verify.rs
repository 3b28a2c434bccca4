//! Invariant suite behind `pesim verify`.

use pesim_core::forcing::{path_rng, ControlPath};
use pesim_core::integrators::{integrate_deterministic, integrate_skeleton, integrate_stochastic, IntegratorConfig};
use pesim_core::ldp::{EventSpec, SkeletonProblem};
use pesim_core::presets::smooth_state;
use pesim_core::probes::{antisymmetry_residual, g_bound_ratios};
use pesim_core::SpectralState;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;

use crate::config::{LoadedConfig, Setup};
use crate::error::{CliError, Result};
use crate::report::{self, Artifacts, Cell};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    /// Passes when value ≤ threshold.
    pub threshold: f64,
    pub pass: bool,
}

fn check(name: &'static str, value: f64, threshold: f64) -> Check {
    Check {
        name,
        value,
        threshold,
        pass: value <= threshold,
    }
}

fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Runs every check at the configured truncation and physics.
pub fn checks(s: &Setup, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let d = &s.dynamics;
    let samples = samples.max(1);
    let states = (0..2 * samples as u64)
        .map(|k| smooth_state(d, 1.0, 1.0, seed.wrapping_add(k)))
        .collect::<pesim_core::Result<Vec<_>>>()?;
    let pairs = || states.chunks(2).map(|p| (&p[0], &p[1]));

    let mut anti: f64 = 0.0;
    let mut pressure: f64 = 0.0;
    let mut coriolis: f64 = 0.0;
    let mut divergence: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    let mut dirichlet: f64 = 0.0;
    let mut g_const: f64 = 0.0;
    let ps = d.pressure();
    let mut rng = path_rng(seed, u64::MAX - 1);
    for (y, y1) in pairs() {
        anti = anti.max(antisymmetry_residual(d, y, y1)?);
        if !ps.modes().is_empty() {
            let q: Vec<f64> = (0..ps.modes().len()).map(|_| rng.sample(StandardNormal)).collect();
            let g = ps.gradient_of(&q);
            let v = ps.gather(y.coeffs());
            if v.norm() > 0.0 {
                pressure = pressure.max(g.dot(&v).abs() / (g.norm() * v.norm()));
            }
        }
        let mut fk = vec![0.0; y.coeffs().len()];
        d.coriolis_into(y.coeffs(), 1.0, &mut fk);
        let nf = fk.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nf > 0.0 {
            let fv: f64 = fk.iter().zip(y.coeffs()).map(|(a, b)| a * b).sum();
            coriolis = coriolis.max(fv.abs() / (nf * y.l2_norm()));
        }
        divergence = divergence.max(d.constraint_residual(y));
        let back = SpectralState::from_collocation(&s.basis, &y.to_collocation())?;
        round_trip = round_trip.max(rel_max_diff(y.coeffs(), back.coeffs()));
        let a = d.apply_a(y)?.inner_product(y1)?;
        let b = d.apply_a(y1)?.inner_product(y)?;
        dirichlet = dirichlet.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
        g_const = g_const.max(g_bound_ratios(d, y)?.against_min);
    }

    // short runs for the integrator and adjoint checks
    let steps = s.integrator.steps()?.min(20);
    let dt = s.integrator.dt;
    let horizon = steps as f64 * dt;
    let mut short = IntegratorConfig::new(horizon, dt);
    short.blowup_ceiling = s.integrator.blowup_ceiling;
    let y0 = &states[0];
    let zero = ControlPath::zeros(horizon, steps, s.noise.len())?;
    let a = integrate_skeleton(d, y0, &zero, &s.noise, &short)?;
    let b = integrate_stochastic(d, y0, 0.0, &s.noise, &short, seed)?;
    let c = integrate_deterministic(d, y0, &short)?;
    let same = |p: &pesim_core::Trajectory, q: &pesim_core::Trajectory| {
        p.states.iter().zip(&q.states).all(|(x, y)| x.coeffs() == y.coeffs())
    };
    let equivalence = if same(&a, &b) && same(&b, &c) { 0.0 } else { 1.0 };
    let envelope = c.ledger.envelope_ratio();

    let event = EventSpec::ball(states[1].clone(), 0.1 * states[1].v_norm().max(1e-3))?;
    let problem = SkeletonProblem::new(d, &s.noise, y0.clone(), event, horizon, dt, steps)?;
    let mut h = problem.zero_control();
    h.values_mut().iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    let penalty = 10.0;
    let g = problem.adjoint_gradient(&h, penalty)?;
    let mut adjoint: f64 = 0.0;
    for _ in 0..3 {
        let mut dir = problem.zero_control();
        dir.values_mut().iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let ad: f64 = g.gradient.values().iter().zip(dir.values()).map(|(a, b)| a * b).sum();
        let eps = 1e-4;
        let f = |sgn: f64| {
            let mut x = h.clone();
            x.values_mut().iter_mut().zip(dir.values()).for_each(|(v, e)| *v += sgn * eps * e);
            problem.objective(&x, penalty)
        };
        let fd = (f(1.0)? - f(-1.0)?) / (2.0 * eps);
        adjoint = adjoint.max((fd - ad).abs() / fd.abs().max(ad.abs()).max(1e-300));
    }

    Ok(vec![
        check("b_antisymmetry", anti, 1e-10),
        check("pressure_orthogonality", pressure, 1e-12),
        check("coriolis_orthogonality", coriolis, 1e-12),
        check("projection_divergence", divergence, 1e-12),
        check("collocation_round_trip", round_trip, 1e-12),
        check("dirichlet_symmetry", dirichlet, 1e-12),
        check("g_bound_constant", g_const, f64::MAX),
        check("skeleton_equivalence", equivalence, 0.0),
        check("energy_envelope", envelope, 1.0),
        check("adjoint_vs_finite_difference", adjoint, 1e-5),
    ])
}

pub fn run(l: &LoadedConfig, s: &Setup, seed: u64, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let list = checks(s, l.config.verify.samples, seed)?;
    let rows: Vec<Vec<Cell>> = list
        .iter()
        .map(|c| {
            vec![
                Cell::Text(c.name.to_string()),
                Cell::Num(c.value),
                Cell::Num(c.threshold),
                Cell::Text(c.pass.to_string()),
            ]
        })
        .collect();
    art.write_table("verify.csv", report::TABLE_VERIFY, &rows)?;
    for c in &list {
        println!("{:<30} {:>12.3e}  <= {:<10.1e} {}", c.name, c.value, c.threshold, if c.pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<&str> = list.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    *details = json!({ "checks": list.len(), "failed": &failed });
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
