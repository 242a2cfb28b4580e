use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn ictmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ictmdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON record")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON record")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_shipped_files() {
    for model in ["two_state.toml", "two_state_impulse.toml"] {
        let out = ictmdp(&["validate", "--model", path_str(&data(model))]);
        let rec = stdout_json(&out);
        assert_eq!(rec["valid"], true);
        assert_eq!(rec["n_states"], 2);
    }
    let rec = stdout_json(&ictmdp(&[
        "validate",
        "--params",
        path_str(&data("epidemic_reference.toml")),
    ]));
    assert_eq!(rec["n_states"], 2728);
    assert_eq!(rec["hd_violation"]["c"], 2);
}

#[test]
fn solve_writes_value_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = ictmdp(&[
        "solve",
        "--model",
        path_str(&data("two_state_impulse.toml")),
        "--out",
        path_str(dir.path()),
    ]);
    let rec = stdout_json(&out);
    assert_eq!(rec["status"], "complete");
    assert_eq!(rec["n_impulsive"], 1);

    let on_disk: Value = serde_json::from_slice(&fs::read(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(on_disk, rec);

    let mut reader = csv::Reader::from_path(dir.path().join("value.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let sick = rows.iter().find(|r| &r[0] == "sick").unwrap();
    let v: f64 = sick[1].parse().unwrap();
    assert!((v - 0.3).abs() < 1e-9, "V(sick) = {v}");
    assert_eq!(&sick[2], "impulsive");
    assert_eq!(&sick[4], "treat");
}

#[test]
fn epidemic_solve_static_carriers() {
    let rec = stdout_json(&ictmdp(&[
        "epidemic-solve",
        "--params",
        path_str(&data("epidemic_static_carriers.toml")),
    ]));
    assert_eq!(rec["c_star"], 1);
    assert_eq!(rec["c_star_infinite"], false);
    let lambda_star = rec["lambda_star"].as_f64().unwrap();
    assert!((lambda_star - 5.0 / 11.0).abs() < 1e-12);
    assert!(rec["hd_violation"].is_null());
}

#[test]
fn epidemic_solve_reference_with_generic_check() {
    let dir = tempfile::tempdir().unwrap();
    let rec = stdout_json(&ictmdp(&[
        "epidemic-solve",
        "--params",
        path_str(&data("epidemic_reference.toml")),
        "--generic",
        "--out",
        path_str(dir.path()),
    ]));
    assert_eq!(rec["c_star"], 2);
    assert_eq!(rec["generic"]["partition_matches_threshold"], true);
    assert!(rec["generic"]["max_separability_error"].as_f64().unwrap() < 1e-6);
    let carrier = fs::read_to_string(dir.path().join("carrier.csv")).unwrap();
    assert!(carrier.starts_with("c,v,continuation,decision,safe_zone\n"));
    assert_eq!(carrier.lines().count(), 1 + 31);
}

#[test]
fn sweep_marks_infinite_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = ictmdp(&[
        "epidemic-sweep",
        "--params",
        path_str(&data("epidemic_reference.toml")),
        "--lambdas",
        "0.3,0.5",
        "--out",
        path_str(dir.path()),
    ]);
    stdout_json(&out);
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "lambda,c_star,lambda_star,residual");
    assert!(rows[1].starts_with("0.3,3,"));
    assert!(rows[2].starts_with("0.5,inf,"));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = ictmdp(&[
            "simulate",
            "--model",
            path_str(&data("two_state.toml")),
            "--x0",
            "sick",
            "--reps",
            "500",
            "--seed",
            "11",
            "--trajectories",
            "3",
            "--threads",
            threads,
            "--out",
            path_str(dir.path()),
        ]);
        assert!(out.status.success());
        let files = ["estimate.json", "trajectories.csv"].map(|f| fs::read(dir.path().join(f)).unwrap());
        (out.stdout, files)
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a, b);
}

#[test]
fn simulate_estimate_brackets_value() {
    let rec = stdout_json(&ictmdp(&[
        "simulate",
        "--model",
        path_str(&data("two_state.toml")),
        "--x0",
        "sick",
        "--reps",
        "4000",
    ]));
    let mean = rec["estimate"]["mean"].as_f64().unwrap();
    let se = rec["estimate"]["std_error"].as_f64().unwrap();
    assert!((mean - 0.5).abs() < 4.0 * se, "mean {mean} se {se}");
}

#[test]
fn dynkin_check_runs() {
    let rec = stdout_json(&ictmdp(&[
        "dynkin-check",
        "--model",
        path_str(&data("two_state.toml")),
        "--x0",
        "sick",
        "--reps",
        "2000",
    ]));
    assert_eq!(rec["result"]["n_replications"], 2000);
    assert!(rec["result"]["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("two_state.toml");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!("model = {:?}\nreps = 300\nseed = 5\nx0 = \"sick\"\n", path_str(&model)),
    )
    .unwrap();
    let rec = stdout_json(&ictmdp(&["simulate", "--config", path_str(&config), "--seed", "9"]));
    assert_eq!(rec["config"]["reps"], 300);
    assert_eq!(rec["config"]["seed"], 9);
    assert_eq!(rec["config"]["tol"], 1e-10);

    fs::write(&config, "reps = 300\nbogus = 1\n").unwrap();
    let out = ictmdp(&["solve", "--config", path_str(&config)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "states = [\"a\"]\n[constants]\neta = \"fast\"\n").unwrap();
    let out = ictmdp(&[
        "solve",
        "--model",
        path_str(&bad),
        "--out",
        path_str(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_json(&out);
    assert_eq!(rec["error"], "parse");
    assert_eq!(rec["line"], 3);
    assert!(out.stdout.is_empty());
    assert!(!dir.path().join("o").exists());

    let out = ictmdp(&["solve"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_models_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("two_state_impulse.toml"))
        .unwrap()
        .replace("cost = 0.3", "cost = 0.1");
    let bad = dir.path().join("cheap.toml");
    fs::write(&bad, text).unwrap();
    let out = ictmdp(&["validate", "--model", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let rec = stderr_json(&out);
    assert_eq!(rec["error"], "validation");
    assert!(!rec["violations"].as_array().unwrap().is_empty());

    let out = ictmdp(&[
        "solve",
        "--params",
        path_str(&data("epidemic_reference.toml")),
        "--strict-hd",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let slow = dir.path().join("slow.toml");
    fs::write(
        &slow,
        r#"states = ["a", "b"]

[gradual_actions]
a = ["go"]
b = ["go"]

[[rates]]
state = "a"
action = "go"
targets = { b = 1.0 }

[[rates]]
state = "b"
action = "go"
targets = { a = 1.0 }

[[costs]]
kind = "gradual"
state = "a"
action = "go"
cost = 1.0

[[costs]]
kind = "gradual"
state = "b"
action = "go"
cost = 0.0

[constants]
eta = 1e-9
K_rate = 1.0
K_cost = 1.0
c_lower = 1.0
"#,
    )
    .unwrap();
    let out = ictmdp(&["solve", "--model", path_str(&slow)]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "non_convergence");
}
