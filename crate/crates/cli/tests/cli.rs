use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

fn base_config() -> Value {
    json!({
        "version": 1,
        "truncation": {"n_h": 2, "n_z": 1},
        "noise": {"kind": "default_family", "sigma0": 1.0},
        "time": {"horizon": 0.2, "dt": 0.01},
        "initial": {"kind": "random_smooth", "amplitude": 1.0, "decay": 1.0, "seed": 3},
        "seed": 11
    })
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn pesim(mode: &str, config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_pesim"))
        .args([mode, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("PESIM_OUT")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&read(dir.join("manifest.json"))).unwrap()
}

#[test]
fn skeleton_with_zero_control_matches_noise_free_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = base_config();
    sim["epsilon"] = json!(0.0);
    let mut ske = base_config();
    ske["control"] = json!({"kind": "zero", "intervals": 4});
    let (a, b) = (tmp.path().join("sim"), tmp.path().join("ske"));
    assert_eq!(pesim("simulate", &write_config(tmp.path(), "sim.json", &sim), &a), 0);
    assert_eq!(pesim("skeleton", &write_config(tmp.path(), "ske.json", &ske), &b), 0);
    for f in ["trajectory.csv", "trajectory_ledger.csv", "trajectory_summary.json"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
    let modes = String::from_utf8(read(a.join("modes.csv"))).unwrap();
    let header = String::from_utf8(read(a.join("trajectory.csv"))).unwrap();
    assert_eq!(modes.lines().count(), header.lines().next().unwrap().split(',').count());
    let m = manifest(&b);
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["mode"], "skeleton");
    assert!(m["artifacts"].as_array().unwrap().iter().any(|f| f == "control.csv"));
}

#[test]
fn skeleton_replays_a_control_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["control"] = json!({"kind": "zero", "intervals": 4});
    let z = tmp.path().join("z");
    assert_eq!(pesim("skeleton", &write_config(tmp.path(), "z.json", &c), &z), 0);
    let header = String::from_utf8(read(z.join("control.csv"))).unwrap();
    let channels = header.lines().next().unwrap().split(',').count() - 2;

    c["control"] = json!({"kind": "constant", "intervals": 4, "value": vec![0.3; channels]});
    let a = tmp.path().join("a");
    assert_eq!(pesim("skeleton", &write_config(tmp.path(), "a.json", &c), &a), 0);
    std::fs::copy(a.join("control.csv"), tmp.path().join("h.csv")).unwrap();
    c["control"] = json!({"kind": "file", "path": "h.csv"});
    let b = tmp.path().join("b");
    assert_eq!(pesim("skeleton", &write_config(tmp.path(), "b.json", &c), &b), 0);
    assert_eq!(read(a.join("trajectory.csv")), read(b.join("trajectory.csv")));
    assert_ne!(read(a.join("trajectory.csv")), read(z.join("trajectory.csv")));
}

#[test]
fn mc_is_deterministic_and_uses_the_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let c = json!({
        "version": 1,
        "truncation": {"n_h": 1, "n_z": 0},
        "physics": {"coriolis": 0.0, "advection": false, "baroclinic": false, "diffusion_scale": 0.05066059182116889},
        "noise": {"kind": "channels", "channels": [{"field": "V1", "i": 1, "j": 1, "m": 0, "sigma": 1.0, "growth": "additive"}]},
        "time": {"horizon": 1.0, "dt": 0.02},
        "event": {"kind": "halfspace", "direction": {"kind": "single_mode", "field": "V1", "i": 1, "j": 1, "m": 0, "amplitude": 1.0}, "level": 0.3},
        "intervals": 50,
        "mc": {"epsilons": [0.1, 0.05], "n_paths": 2000},
        "seed": 5
    });
    let cfg = write_config(tmp.path(), "mc.json", &c);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(pesim("mc", &cfg, &a), 0);
    assert_eq!(pesim("mc", &cfg, &b), 0);
    let text = String::from_utf8(read(a.join("mc.csv"))).unwrap();
    assert_eq!(text.lines().next().unwrap(), "epsilon,p_hat,stderr,neg_eps_log_p,I_star");
    assert_eq!(text.lines().count(), 3);
    assert_eq!(read(a.join("mc.csv")), read(b.join("mc.csv")));
    let i_star: f64 = text.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((i_star - 0.3f64.powi(2) / (1.0 - (-2.0f64).exp()) / 1.0).abs() < 0.01, "{i_star}");
}

#[test]
fn converge_table_has_schema_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["time"] = json!({"horizon": 1.0, "dt": 0.0625});
    c["control"] = json!({"kind": "zero", "intervals": 16});
    c["converge"] = json!({"amp": 1.0, "n_list": [1, 2, 4]});
    let out = tmp.path().join("o");
    assert_eq!(pesim("converge", &write_config(tmp.path(), "c.json", &c), &out), 0);
    let text = String::from_utf8(read(out.join("converge.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,re_norm_diff,action_gap");
    assert_eq!(lines.count(), 3);
}

#[test]
fn verify_passes_at_small_truncation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["truncation"] = json!({"n_h": 2, "n_z": 2});
    c["verify"] = json!({"samples": 5});
    let out = tmp.path().join("v");
    assert_eq!(pesim("verify", &write_config(tmp.path(), "v.json", &c), &out), 0);
    let text = String::from_utf8(read(out.join("verify.csv"))).unwrap();
    assert_eq!(text.lines().next().unwrap(), "check,value,threshold,pass");
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")), "{text}");
}

#[test]
fn scan_writes_one_row_per_control() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["scan"] = json!({"m": 1.0, "n_random": 3, "intervals": 4});
    let out = tmp.path().join("s");
    assert_eq!(pesim("scan", &write_config(tmp.path(), "s.json", &c), &out), 0);
    let text = String::from_utf8(read(out.join("scan.csv"))).unwrap();
    assert_eq!(text.lines().next().unwrap(), "control,re_norm");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(pesim("simulate", &tmp.path().join("missing.json"), &out), 2);
    let mut c = base_config();
    c["unexpected"] = json!(1);
    assert_eq!(pesim("simulate", &write_config(tmp.path(), "u.json", &c), &out), 2);
    let mut c = base_config();
    c["mode"] = json!("mc");
    assert_eq!(pesim("simulate", &write_config(tmp.path(), "m.json", &c), &out), 2);
    // a skeleton run without a control section is a config error with a manifest
    assert_eq!(pesim("skeleton", &write_config(tmp.path(), "s.json", &base_config()), &out), 2);
    assert_eq!(manifest(&out)["exit_code"], 2);
}

#[test]
fn blow_up_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["time"]["blowup_ceiling"] = json!(1e-3);
    let out = tmp.path().join("o");
    assert_eq!(pesim("simulate", &write_config(tmp.path(), "b.json", &c), &out), 3);
    assert_eq!(manifest(&out)["exit_code"], 3);
}

#[test]
fn non_convergence_exits_with_code_four_and_keeps_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["event"] = json!({"kind": "ball", "center": {"kind": "random_smooth", "amplitude": 3.0, "decay": 0.5, "seed": 9}, "radius": 1e-3});
    c["intervals"] = json!(4);
    c["optimizer"] = json!({"max_iters": 2, "max_penalty_rounds": 1});
    let out = tmp.path().join("o");
    assert_eq!(pesim("minimize-action", &write_config(tmp.path(), "n.json", &c), &out), 4);
    for f in ["action.json", "h_star.csv", "instanton.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn env_var_overrides_configured_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base_config();
    c["out"] = json!("configured");
    let cfg = write_config(tmp.path(), "e.json", &c);
    let target = tmp.path().join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_pesim"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .env("PESIM_OUT", &target)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(target.join("manifest.json").exists());
    assert!(!tmp.path().join("configured").exists());
    let m = manifest(&target);
    let hash = pesim_cli::report::sha256_hex(&std::fs::read(&cfg).unwrap());
    assert_eq!(m["config_sha256"], json!(hash));
    assert_eq!(m["seed"], 11);
}
