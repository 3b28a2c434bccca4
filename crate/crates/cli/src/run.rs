//! Mode dispatch.

use std::path::PathBuf;
use std::time::Instant;

use pesim_core::forcing::{path_rng, ControlPath};
use pesim_core::integrators::{integrate_skeleton, integrate_stochastic, re_norm, Trajectory};
use pesim_core::ldp::{
    level_set_scan, mc_rare_event, minimize_action, weak_convergence_experiment, ActionResult, McEstimate,
    SkeletonProblem,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, LoadedConfig, Mode, Setup};
use crate::error::{exit, CliError, Result};
use crate::report::{self, Artifacts, Cell, Manifest, Versions};
use crate::verify;

/// One command-line invocation.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub mode: Mode,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Runs the invocation, writes the manifest and returns the exit code.
pub fn execute(inv: &Invocation) -> i32 {
    let started = Instant::now();
    let loaded = match config::load(&inv.config).and_then(|l| check_mode(l, inv.mode)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("pesim: {e}");
            return e.exit_code();
        }
    };
    let seed = inv.seed.unwrap_or(loaded.config.seed);
    let dir = report::output_dir(inv.out.as_deref(), loaded.config.out.as_deref(), &loaded.base);
    let mut art = match Artifacts::create(&dir) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("pesim: {e}");
            return e.exit_code();
        }
    };
    let mut details = serde_json::Value::Null;
    let result = art
        .write_bytes("config.json", &loaded.raw)
        .and_then(|_| dispatch(inv.mode, &loaded, seed, &mut art, &mut details));
    let (code, status) = match &result {
        Ok(()) => (exit::OK, "ok".to_string()),
        Err(e) => {
            eprintln!("pesim: {e}");
            (e.exit_code(), e.to_string())
        }
    };
    let manifest = Manifest {
        mode: inv.mode.name(),
        config_sha256: report::sha256_hex(&loaded.raw),
        seed,
        versions: Versions::current(),
        wall_time_s: started.elapsed().as_secs_f64(),
        exit_code: code,
        status,
        artifacts: art.files().to_vec(),
        details,
    };
    if let Err(e) = art.write_json("manifest.json", &manifest) {
        eprintln!("pesim: {e}");
        return if code == exit::OK { e.exit_code() } else { code };
    }
    code
}

fn check_mode(l: LoadedConfig, mode: Mode) -> Result<LoadedConfig> {
    match l.config.mode {
        Some(m) if m != mode => Err(CliError::Config(format!(
            "config is for mode {} but {} was requested",
            m.name(),
            mode.name()
        ))),
        _ => Ok(l),
    }
}

fn dispatch(
    mode: Mode,
    l: &LoadedConfig,
    seed: u64,
    art: &mut Artifacts,
    details: &mut serde_json::Value,
) -> Result<()> {
    let s = l.setup()?;
    match mode {
        Mode::Simulate => simulate(l, &s, seed, art, details),
        Mode::Skeleton => skeleton(l, &s, art, details),
        Mode::MinimizeAction => minimize(l, &s, art, details),
        Mode::Mc => mc(l, &s, seed, art, details),
        Mode::Verify => verify::run(l, &s, seed, art, details),
        Mode::Converge => converge(l, &s, art, details),
        Mode::Scan => scan(l, &s, seed, art, details),
    }
}

/// Scalar summary of a trajectory; identical for identical trajectories.
#[derive(Serialize)]
struct TrajectorySummary {
    stored_states: usize,
    final_l2: f64,
    final_v: f64,
    sup_l2_sq: f64,
    sup_v_sq: f64,
    re_norm: f64,
    energy_bound: f64,
    envelope_ratio: f64,
    summed_energy_residual: f64,
}

fn write_trajectory(art: &mut Artifacts, prefix: &str, t: &Trajectory) -> Result<()> {
    art.write_with(&format!("{prefix}.csv"), |w| t.write_states_csv(w))?;
    if !t.ledger.records.is_empty() {
        art.write_with(&format!("{prefix}_ledger.csv"), |w| t.ledger.write_csv(w))?;
    }
    let fin = t.final_state();
    if !art.files().iter().any(|f| f == "modes.csv") {
        let rows: Vec<Vec<Cell>> = fin
            .basis()
            .modes()
            .iter()
            .enumerate()
            .map(|(k, m)| {
                vec![
                    Cell::Text(format!("c{k}")),
                    Cell::Text(format!("{:?}", m.field)),
                    Cell::Int(m.i as u64),
                    Cell::Int(m.j as u64),
                    Cell::Int(m.m as u64),
                ]
            })
            .collect();
        art.write_table("modes.csv", report::TABLE_MODES, &rows)?;
    }
    art.write_json(
        &format!("{prefix}_summary.json"),
        &TrajectorySummary {
            stored_states: t.states.len(),
            final_l2: fin.l2_norm(),
            final_v: fin.v_norm(),
            sup_l2_sq: t.sup_l2_sq(),
            sup_v_sq: t.sup_v_sq(),
            re_norm: re_norm(t),
            energy_bound: t.ledger.energy_bound(),
            envelope_ratio: t.ledger.envelope_ratio(),
            summed_energy_residual: t.ledger.summed_residual(),
        },
    )
}

fn simulate(l: &LoadedConfig, s: &Setup, seed: u64, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let eps = l.config.epsilon;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(CliError::Config(format!("epsilon = {eps} must be ≥ 0")));
    }
    let t = integrate_stochastic(&s.dynamics, &s.y0, eps, &s.noise, &s.integrator, seed)?;
    *details = json!({ "trajectory": t.manifest() });
    write_trajectory(art, "trajectory", &t)
}

fn required<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::Config(format!("this mode needs a `{name}` section")))
}

fn skeleton(l: &LoadedConfig, s: &Setup, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let h = l.control(required(&l.config.control, "control")?, s.noise.len())?;
    let t = integrate_skeleton(&s.dynamics, &s.y0, &h, &s.noise, &s.integrator)?;
    *details = json!({ "trajectory": t.manifest(), "action": h.action() });
    write_trajectory(art, "trajectory", &t)?;
    art.write_with("control.csv", |w| h.write_csv(w))
}

fn control_intervals(l: &LoadedConfig, s: &Setup) -> Result<usize> {
    Ok(match l.config.intervals {
        Some(k) => k,
        None => s.integrator.steps()?,
    })
}

#[derive(Serialize)]
struct ActionSummary {
    action: f64,
    best_action: f64,
    converged: bool,
    iterations: usize,
    gradient_norm_final: f64,
    event_residual: f64,
    penalty: f64,
}

impl From<&ActionResult> for ActionSummary {
    fn from(r: &ActionResult) -> Self {
        Self {
            action: r.action,
            best_action: r.best_action,
            converged: r.converged,
            iterations: r.iterations,
            gradient_norm_final: r.gradient_norm_final,
            event_residual: r.event_residual,
            penalty: r.penalty,
        }
    }
}

fn solve_action(l: &LoadedConfig, s: &Setup) -> Result<ActionResult> {
    let event = l.event(&s.basis, &s.dynamics)?;
    let p = SkeletonProblem::new(
        &s.dynamics,
        &s.noise,
        s.y0.clone(),
        event,
        s.integrator.horizon,
        s.integrator.dt,
        control_intervals(l, s)?,
    )?;
    Ok(minimize_action(&p, &l.config.optimizer)?)
}

fn not_converged(r: &ActionResult) -> CliError {
    CliError::NotConverged(format!(
        "event residual {:.3e}, gradient norm {:.3e} after {} iterations",
        r.event_residual, r.gradient_norm_final, r.iterations
    ))
}

fn minimize(l: &LoadedConfig, s: &Setup, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let r = solve_action(l, s)?;
    let summary = ActionSummary::from(&r);
    *details = json!({ "action": &summary, "trajectory": r.trajectory.manifest() });
    art.write_json("action.json", &summary)?;
    art.write_with("h_star.csv", |w| r.h_star.write_csv(w))?;
    write_trajectory(art, "instanton", &r.trajectory)?;
    if r.converged && r.action.is_finite() {
        Ok(())
    } else {
        Err(not_converged(&r))
    }
}

fn mc(l: &LoadedConfig, s: &Setup, seed: u64, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let spec = required(&l.config.mc, "mc")?;
    let event = l.event(&s.basis, &s.dynamics)?;
    let action = if spec.compute_action {
        Some(solve_action(l, s)?)
    } else {
        None
    };
    let i_star = action.as_ref().map_or(f64::NAN, |r| r.action);
    let mut cfg = s.integrator;
    cfg.monitor = false;
    cfg.store_stride = cfg.steps()?;
    let estimates = spec
        .epsilons
        .iter()
        .map(|&eps| mc_rare_event(&s.dynamics, &s.noise, &s.y0, &event, eps, spec.n_paths, &cfg, seed))
        .collect::<pesim_core::Result<Vec<McEstimate>>>()?;
    let rows: Vec<Vec<Cell>> = estimates
        .iter()
        .map(|e| {
            vec![
                Cell::Num(e.epsilon),
                Cell::Num(e.p_hat),
                Cell::Num(e.stderr),
                Cell::Num(e.neg_eps_log_p),
                Cell::Num(i_star),
            ]
        })
        .collect();
    art.write_table("mc.csv", report::TABLE_MC, &rows)?;
    let summary = action.as_ref().map(ActionSummary::from);
    let doc = json!({ "estimates": &estimates, "i_star": i_star, "action": &summary });
    art.write_json("mc.json", &doc)?;
    *details = doc;
    match action {
        Some(r) if !(r.converged && r.action.is_finite()) => Err(not_converged(&r)),
        _ => Ok(()),
    }
}

fn converge(l: &LoadedConfig, s: &Setup, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let spec = required(&l.config.converge, "converge")?;
    let h = l.control(required(&l.config.control, "control")?, s.noise.len())?;
    let mut cfg = s.integrator;
    cfg.monitor = false;
    let r = weak_convergence_experiment(&s.dynamics, &s.noise, &s.y0, &h, &cfg, spec.amp, spec.channel, &spec.n_list)?;
    let rows: Vec<Vec<Cell>> = r
        .rows
        .iter()
        .map(|row| vec![Cell::Int(row.n as u64), Cell::Num(row.re_norm_diff), Cell::Num(row.action_gap)])
        .collect();
    art.write_table("converge.csv", report::TABLE_CONVERGE, &rows)?;
    art.write_json("converge.json", &r)?;
    *details = json!({ "rows": r.rows.len() });
    Ok(())
}

fn scan(l: &LoadedConfig, s: &Setup, seed: u64, art: &mut Artifacts, details: &mut serde_json::Value) -> Result<()> {
    let spec = required(&l.config.scan, "scan")?;
    let nc = s.noise.len();
    let mut controls = Vec::new();
    if let Some(c) = &l.config.control {
        controls.push(l.control(c, nc)?);
    }
    for f in &spec.files {
        controls.push(l.control_file(f)?);
    }
    for k in 0..spec.n_random as u64 {
        let mut rng = path_rng(seed, k);
        let v: Vec<f64> = (0..spec.intervals * nc)
            .map(|_| spec.scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        controls.push(ControlPath::from_values(s.integrator.horizon, nc, v)?);
    }
    let mut cfg = s.integrator;
    cfg.monitor = false;
    let r = level_set_scan(&s.dynamics, &s.noise, &s.y0, spec.m, &controls, &cfg)?;
    let rows: Vec<Vec<Cell>> = r
        .re_norms
        .iter()
        .enumerate()
        .map(|(k, v)| vec![Cell::Int(k as u64), Cell::Num(*v)])
        .collect();
    art.write_table("scan.csv", report::TABLE_SCAN, &rows)?;
    art.write_json("scan.json", &r)?;
    *details = json!({ "controls": controls.len(), "uniform_bound": r.uniform_bound, "max_pairwise": r.max_pairwise });
    Ok(())
}
