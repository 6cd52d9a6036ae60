use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use spreach::hj::{io, PayoffFn};
use tempfile::TempDir;

fn spreach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreach"))
        .args(args)
        .env_remove(spreach_cli::OUT_ENV)
        .output()
        .unwrap()
}

fn circuit_config() -> Value {
    json!({
        "system": { "kind": "genetic_circuit", "alpha": 1.0 },
        "grid": { "lower": [0.0], "upper": [1.0], "nodes": 21 },
        "fast_grid": { "lower": [0.0], "upper": [1.0], "nodes": 21 },
        "payoff": { "target_lower": [0.25], "target_upper": [0.75], "slope": 10.0, "cap": 3.0 },
        "solve": { "t_final": -0.5, "eta": 0.1, "eps": [0.01] },
        "verify": { "n_samples": 200, "n_probes": 200, "decay_trials": 20 },
        "output": { "formats": ["csv", "json", "binary"] }
    })
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = circuit_config();
    cfg["solve"]["etaa"] = json!(0.1);
    let path = write_config(dir.path(), &cfg);
    let out = spreach(&[
        "solve",
        "--config",
        &path,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(spreach_cli::EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("etaa"));
}

#[test]
fn nonpositive_eta_names_the_field() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &circuit_config());
    let out = spreach(&[
        "bounds",
        "--config",
        &path,
        "--eta",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(spreach_cli::EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solve.eta"));
}

#[test]
fn commands_other_than_reproduction_need_a_config() {
    let out = spreach(&["solve"]);
    assert_eq!(out.status.code(), Some(spreach_cli::EXIT_CONFIG));
    let out = spreach(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(spreach_cli::EXIT_CONFIG));
}

#[test]
fn zero_horizon_solve_writes_the_payoff() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &circuit_config());
    let out_dir = dir.path().join("out");
    let out = spreach(&[
        "solve",
        "--config",
        &path,
        "--t",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read(out_dir.join("reduced_field.csv")).unwrap();
    let field = io::read_csv(csv.as_slice()).unwrap();
    let ell = PayoffFn::target_box(&[0.25], &[0.75], 10.0, 3.0, &[]).unwrap();
    for i in 0..field.grid.len() {
        let expect = ell.eval(&field.grid.node_coords(i));
        assert!((field.values[i] - expect).abs() < 1e-12);
    }
    let bin = std::fs::read(out_dir.join("reduced_field.bin")).unwrap();
    let from_bin = io::read_binary(bin.as_slice()).unwrap();
    for (a, b) in from_bin.values.iter().zip(&field.values) {
        assert!((a - b).abs() < 1e-12);
    }
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert!(manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .any(|a| a["path"] == "reduced_field.bin"));
    assert!(out_dir.join("timing.json").exists());
}

#[test]
fn verify_reports_the_circuit_certificate() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &circuit_config());
    let out = spreach(&[
        "verify",
        "--config",
        &path,
        "--expect-pass",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = read_json(&dir.path().join("verify.json"));
    let stab = &doc["report"]["stability"];
    assert_eq!(stab["status"], "certified");
    assert_eq!(stab["nu"], 1.0);
    assert_eq!(stab["kappa"], 0.5);
    assert!(doc["report"]["isaacs"]["max_gap"].as_f64().unwrap() <= 1e-9);
    assert!(doc.get("mrn_inflow_gain").is_none());
}

#[test]
fn verify_mrn_surfaces_both_inflow_signs() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "system": { "kind": "mrn", "n_metabolites": 5, "seed": 3 },
        "grid": { "lower": [0.0, 0.0, 0.0], "upper": [1.0, 1.0, 1.0], "nodes": 5 },
        "payoff": { "target_lower": [0.0, 0.4, 0.4], "target_upper": [1.0, 0.6, 0.6],
                    "slope": 10.0, "cap": 4.0, "free_dims": [0] },
        "solve": { "t_final": -1.0, "eta": 0.5 },
        "verify": { "n_samples": 100, "n_probes": 100, "decay_trials": 5,
                    "lyapunov": { "kind": "nominal" } }
    });
    let path = write_config(dir.path(), &cfg);
    let out = spreach(&[
        "verify",
        "--config",
        &path,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = read_json(&dir.path().join("verify.json"));
    let gain = doc["mrn_inflow_gain"]["reduced"].as_f64().unwrap();
    assert!((gain - 1.0).abs() < 1e-9);
    assert!((doc["mrn_inflow_gain"]["opposite_sign"].as_f64().unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn failing_containment_exits_with_verdict_code() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &circuit_config());
    let out = spreach(&[
        "bounds",
        "--config",
        &path,
        "--eps",
        "1",
        "--expect-pass",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(spreach_cli::EXIT_VERDICT));
    let doc = read_json(&dir.path().join("bounds.json"));
    assert_eq!(doc["containment"][0]["passed"], false);
}

#[test]
fn output_dir_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &circuit_config());
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_spreach"))
        .args(["solve", "--config", &path, "--t", "0"])
        .env(spreach_cli::OUT_ENV, &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("manifest.json").exists());
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let mut cfg = circuit_config();
    cfg["solve"]["snapshot_every"] = json!(0.1);
    cfg["experiment"] = json!({
        "initial_states": [{ "z": [0.5], "y": [0.5] }, { "z": [0.05] }],
        "n_disturbances": 3,
        "seed": 7
    });
    cfg["output"] = json!({ "formats": ["csv", "json", "svg"] });
    let path = write_config(dir.path(), &cfg);
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let d = dir.path().join(name);
            let out = spreach(&["simulate", "--config", &path, "--out", d.to_str().unwrap()]);
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            d
        })
        .collect();
    let manifest = |d: &Path| std::fs::read(d.join("manifest.json")).unwrap();
    assert_eq!(manifest(&runs[0]), manifest(&runs[1]));
    let doc = read_json(&runs[0].join("experiment.json"));
    let states = doc["experiments"][0]["states"].as_array().unwrap();
    assert_eq!(states.len(), 2);
    assert_eq!(states[0]["prediction"], "inside-inner");
    assert_eq!(states[0]["consistent"], true);
    assert!(runs[0]
        .join("trajectory_eps_0.01_state_1_run_2.csv")
        .exists());
}
