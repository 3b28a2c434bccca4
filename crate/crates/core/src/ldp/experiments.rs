use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::forcing::{ControlPath, NoiseModel};
use crate::integrators::{
    integrate_deterministic, integrate_skeleton, integrate_stochastic_path, integrate_z, re_norm,
    IntegratorConfig, Stepper,
};
use crate::spectral::{norm_s_sq, SpectralState};

use super::montecarlo::simulate_path;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// |Y_n − Y|²_ℜ = sup‖ρ_n‖² + ∫‖ρ_n‖₂².
    pub re_norm_diff: f64,
    /// 2·action(h_n) − 2·action(h).
    pub action_gap: f64,
    pub sup_l2_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub amp: f64,
    pub channel: usize,
    pub horizon: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Skeleton responses to h_n = h + amp·sin(2πnt)e_channel against the
/// response to h.
#[allow(clippy::too_many_arguments)]
pub fn weak_convergence_experiment(
    dynamics: &Dynamics,
    noise: &NoiseModel,
    y0: &SpectralState,
    h: &ControlPath,
    cfg: &IntegratorConfig,
    amp: f64,
    channel: usize,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    let families = n_list
        .iter()
        .map(|&n| h.oscillatory_family(n, amp, channel))
        .collect::<Result<Vec<_>>>()?;
    let base = integrate_skeleton(dynamics, y0, h, noise, cfg)?;
    let rows = n_list
        .par_iter()
        .zip(&families)
        .map(|(&n, hn)| {
            let t = integrate_skeleton(dynamics, y0, hn, noise, cfg)?;
            let diff = t.difference(&base)?;
            Ok(ConvergenceRow {
                n,
                re_norm_diff: re_norm(&diff),
                action_gap: 2.0 * (hn.action() - h.action()),
                sup_l2_diff: diff.sup_l2_sq(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        amp,
        channel,
        horizon: h.horizon(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub m: f64,
    pub re_norms: Vec<f64>,
    pub uniform_bound: f64,
    /// |Y_i − Y_j|²_ℜ.
    pub pairwise: Vec<Vec<f64>>,
    pub max_pairwise: f64,
}

/// Skeleton runs for controls projected into T_M, with their ℜ-norms and
/// pairwise ℜ-distances.
pub fn level_set_scan(
    dynamics: &Dynamics,
    noise: &NoiseModel,
    y0: &SpectralState,
    m: f64,
    controls: &[ControlPath],
    cfg: &IntegratorConfig,
) -> Result<ScanReport> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("empty control grid".into()));
    }
    let trajs = controls
        .par_iter()
        .map(|h| integrate_skeleton(dynamics, y0, &h.project_to_tm(m)?, noise, cfg))
        .collect::<Result<Vec<_>>>()?;
    let re_norms: Vec<f64> = trajs.iter().map(re_norm).collect();
    let n = trajs.len();
    let mut pairwise = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = re_norm(&trajs[i].difference(&trajs[j])?);
            pairwise[i][j] = d;
            pairwise[j][i] = d;
        }
    }
    Ok(ScanReport {
        m,
        uniform_bound: re_norms.iter().fold(0.0, |a: f64, &b| a.max(b)),
        max_pairwise: pairwise.iter().flatten().fold(0.0, |a: f64, &b| a.max(b)),
        re_norms,
        pairwise,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub epsilon: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of log mean against log ε.
    pub slope: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

fn report(eps: &[f64], samples: Vec<Vec<f64>>) -> ScalingReport {
    let points: Vec<ScalingPoint> = eps
        .iter()
        .zip(&samples)
        .map(|(&e, s)| {
            let (mean, stderr) = mean_stderr(s);
            ScalingPoint { epsilon: e, mean, stderr }
        })
        .collect();
    let slope = loglog_slope(eps, &points.iter().map(|p| p.mean).collect::<Vec<_>>());
    ScalingReport { points, slope }
}

/// E sup_t |Y^ε(t) − Y⁰(t)|² per ε, with common random numbers across ε.
#[allow(clippy::too_many_arguments)]
pub fn small_noise_scaling(
    dynamics: &Dynamics,
    noise: &NoiseModel,
    y0: &SpectralState,
    eps_list: &[f64],
    n_paths: usize,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<ScalingReport> {
    let steps = cfg.steps()?;
    let mut det_cfg = *cfg;
    det_cfg.store_stride = 1;
    det_cfg.monitor = false;
    let reference = integrate_deterministic(dynamics, y0, &det_cfg)?;
    let stepper = Stepper::new(dynamics, cfg.dt)?;
    let samples = eps_list
        .iter()
        .map(|&eps| {
            (0..n_paths as u64)
                .into_par_iter()
                .map(|p| {
                    let mut k = 0;
                    let mut sup: f64 = 0.0;
                    simulate_path(&stepper, noise, y0.coeffs(), eps, steps, seed, p, cfg.blowup_ceiling, |y| {
                        let r = reference.states[k].coeffs();
                        let d: f64 = y.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum();
                        sup = sup.max(d);
                        k += 1;
                    })?;
                    Ok(sup)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(eps_list, samples))
}

/// E sup_t ‖Z_ε(t)‖² per ε, each path driven by the noise and state path of
/// a stochastic run at the same ε and stream.
#[allow(clippy::too_many_arguments)]
pub fn z_vanishing(
    dynamics: &Dynamics,
    noise: &NoiseModel,
    y0: &SpectralState,
    eps_list: &[f64],
    n_paths: usize,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<ScalingReport> {
    let mut run_cfg = *cfg;
    run_cfg.monitor = false;
    run_cfg.store_stride = cfg.steps()?;
    let ev = dynamics.basis().eigenvalues();
    let samples = eps_list
        .iter()
        .map(|&eps| {
            (0..n_paths as u64)
                .into_par_iter()
                .map(|p| {
                    let (_, rec) = integrate_stochastic_path(dynamics, y0, eps, noise, &run_cfg, seed, p, true)?;
                    let mut zc = *cfg;
                    zc.store_stride = 1;
                    let z = integrate_z(dynamics, eps, rec.as_ref().expect("recorded"), noise, &zc)?;
                    Ok(z.states
                        .iter()
                        .fold(0.0, |a: f64, s| a.max(norm_s_sq(ev, s.coeffs(), 1.0))))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(eps_list, samples))
}
