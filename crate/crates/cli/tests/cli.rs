use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "axis_value,n_steps,mean_error,stderr,estimator_tag,replications,seed";

fn nanbu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanbu"))
        .args(args)
        .env_remove("NANBU_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SIMULATE: &str = r#"{
    "model": { "kind": "kac" },
    "initial_condition": { "kind": "gaussian", "mean": [1.0], "variance": [1.0] },
    "scheme": { "scheme": "nanbu", "dt": 0.1, "horizon": 0.5, "n_particles": 500, "seed": 3 },
    "output": { "prefix": "sim" }
}"#;

const SWEEP_N: &str = r#"{
    "model": { "kind": "kac" },
    "initial_condition": { "kind": "gaussian", "mean": [1.0], "variance": [1.0] },
    "scheme": { "scheme": "trmc", "dt": 0.1, "epsilon": 0.5, "horizon": 0.3, "seed": 11 },
    "sweep": {
        "axis": "particle_count",
        "values": [100, 200, 400],
        "replications": 3,
        "reference": { "kind": "large_n_run", "factor": 16 }
    },
    "output": { "prefix": "n" }
}"#;

const SWEEP_DT: &str = r#"{
    "model": { "kind": "kac" },
    "initial_condition": { "kind": "point_mass", "center": [1.0] },
    "scheme": { "scheme": "nanbu", "horizon": 1.0, "seed": 0 },
    "sweep": {
        "axis": "time_step",
        "values": [0.0125, 0.025, 0.05, 0.1],
        "reference": { "kind": "moment_oracle", "quantity": "mean" }
    },
    "output": { "prefix": "dt" }
}"#;

#[test]
fn simulate_writes_default_formats() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sim.json", SIMULATE);
    let out_dir = dir.path().join("out");
    let out = nanbu(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let json: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("sim.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["results"].as_array().unwrap().len(), 6);
    assert_eq!(json["plan"]["scheme"]["seed"], 3);
    let csv = fs::read_to_string(out_dir.join("sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn seed_flag_overrides_config_and_changes_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sim.json", SIMULATE);
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = nanbu(&[
            "simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
            "--seed", seed, "--format", "csv",
        ]);
        assert_eq!(code(&out), 0);
        assert!(!out_dir.join("sim.json").exists());
        fs::read(out_dir.join("sim.csv")).unwrap()
    };
    assert_eq!(run("5", "a"), run("5", "b"));
    assert_ne!(run("5", "a"), run("6", "c"));
}

#[test]
fn converge_dt_emits_all_formats() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "dt.json", SWEEP_DT);
    let out_dir = dir.path().join("out");
    let out = nanbu(&[
        "converge-dt", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
        "--format", "csv", "--format", "json", "--format", "svg",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("dt.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0.0125");
    assert_eq!(first[1], "80");
    assert_eq!(first[4], "oracle_mean");

    let json: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("dt.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    let slope = json["rate_fit"]["slope"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&slope), "{slope}");
    assert_eq!(json["results"].as_array().unwrap().len(), 4);

    let svg = fs::read_to_string(out_dir.join("dt.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn converge_n_is_thread_count_invariant() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "n.json", SWEEP_N);
    let run = |threads: &str| {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = nanbu(&[
            "converge-n", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
            "--threads", threads, "--format", "csv",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(out_dir.join("n.csv")).unwrap(), fs::read(out_dir.join("n_sup.csv")).unwrap())
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let text = String::from_utf8(one.0).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let unknown = write_config(dir.path(), "bad.json", &SIMULATE.replace("\"seed\": 3", "\"seed\": 3, \"sede\": 4"));
    let out = nanbu(&["simulate", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));

    let missing = dir.path().join("nope.json");
    assert_eq!(code(&nanbu(&["simulate", "--config", missing.to_str().unwrap()])), 2);

    // a particle-count sweep handed to converge-dt
    let sweep = write_config(dir.path(), "n.json", SWEEP_N);
    assert_eq!(code(&nanbu(&["converge-dt", "--config", sweep.to_str().unwrap()])), 2);

    let descending = write_config(dir.path(), "desc.json", &SWEEP_N.replace("[100, 200, 400]", "[400, 200, 100]"));
    let out = nanbu(&["converge-n", "--config", descending.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    assert_eq!(code(&nanbu(&["simulate", "--config", unknown.to_str().unwrap(), "--format", "pdf"])), 2);
    let cfg = write_config(dir.path(), "sim.json", SIMULATE);
    assert_eq!(code(&nanbu(&["simulate", "--config", cfg.to_str().unwrap(), "--threads", "0"])), 2);

    let trmc_wealth = SIMULATE
        .replace(r#"{ "kind": "kac" }"#, r#"{ "kind": "wealth", "gamma": 0.25 }"#)
        .replace(r#""kind": "gaussian", "mean": [1.0], "variance": [1.0]"#, r#""kind": "point_mass", "center": [1.0]"#)
        .replace(r#""scheme": "nanbu""#, r#""scheme": "trmc", "epsilon": 1.0"#);
    let trmc_wealth = write_config(dir.path(), "tw.json", &trmc_wealth);
    let out = nanbu(&["simulate", "--config", trmc_wealth.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sim.json", SIMULATE);
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = nanbu(&["simulate", "--config", cfg.to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn validate_passes_for_a_configured_model() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sim.json", SIMULATE);
    let out_dir = dir.path().join("v");
    let out = nanbu(&[
        "validate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("sim.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert!(!json["results"].as_array().unwrap().is_empty());
}
