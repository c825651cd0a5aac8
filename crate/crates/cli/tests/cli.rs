use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use shifttest::engine::expression_weights;
use shifttest::level_bounds::max_m_for_level;
use shifttest::{estimate_second_moment, Dataset};

fn shifttest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shifttest"))
        .args(args)
        .env_remove("SHIFTTEST_THREADS")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_data(dir: &Path, n: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let x = ((i * 37) % 101) as f64 / 50.0 - 1.0;
            let y = ((i * 53) % 97) as f64 / 48.0 - 1.0;
            vec![x, y]
        })
        .collect();
    let d = Dataset::from_rows(vec!["x".into(), "y".into()], &rows).unwrap();
    d.write_csv(fs::File::create(dir.join("data.csv")).unwrap()).unwrap();
    d
}

#[test]
fn bound_examples() {
    let v = json_stdout(&shifttest(&["bound", "--n", "40", "--m", "6", "--k", "1", "--alpha-phi", "0.05"]));
    assert_eq!(v["bound"].as_f64().unwrap(), 0.05);

    let v = json_stdout(&shifttest(&["bound", "--n", "4", "--m", "2", "--k", "2"]));
    assert!((v["v_nm"].as_f64().unwrap() - 7.0 / 6.0).abs() < 1e-12);

    let v = json_stdout(&shifttest(&["bound", "--n", "100", "--k", "1.5", "--alpha-phi", "0.05", "--alpha-psi", "0.01"]));
    assert!(v["max_m"].is_null());
    assert!(v["message"].as_str().unwrap().contains("alpha_psi"));

    let v = json_stdout(&shifttest(&["bound", "--n", "500", "--k", "1.5", "--alpha-psi", "0.1"]));
    let expected = max_m_for_level(500, 1.5, 0.05, 0.1).unwrap().m;
    assert_eq!(v["max_m"].as_u64().map(|m| m as usize), expected);
}

#[test]
fn malformed_config_reports_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"data\": \"data.csv\",\n  \"m\": 10,,\n}").unwrap();
    let out = shifttest(&["test", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte offset"), "{err}");

    fs::write(&cfg, r#"{"data": "data.csv", "shift": {"kind": "identity"}, "test": {"kind": "pearson_corr", "x": "x", "y": "y"}, "mm": 3}"#).unwrap();
    let out = shifttest(&["test", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mm"));
}

#[test]
fn identity_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 200);
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"data": "data.csv", "shift": {"kind": "identity"},
            "test": {"kind": "pearson_corr", "x": "x", "y": "y"}, "m": 20, "seed": 4}"#,
    )
    .unwrap();
    let v = json_stdout(&shifttest(&["test", cfg.to_str().unwrap()]));
    assert!(v["reject"].is_boolean());
    assert_eq!(v["m_used"], 20);

    // same seed, same answer
    let again = json_stdout(&shifttest(&["test", cfg.to_str().unwrap()]));
    assert_eq!(v, again);
}

#[test]
fn finite_bound_uses_the_level_scan() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 300);
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"data": "data.csv", "shift": {"kind": "explicit", "expression": "1 + x*x"},
            "test": {"kind": "pearson_corr", "x": "x", "y": "y"},
            "m": "finite-bound", "alpha": 0.05, "alpha_psi": 0.1}"#,
    )
    .unwrap();
    let v = json_stdout(&shifttest(&["test", cfg.to_str().unwrap()]));
    let w = expression_weights("1 + x*x").unwrap().evaluate(&data).unwrap();
    let k = estimate_second_moment(&w).unwrap();
    let expected = max_m_for_level(300, k, 0.05, 0.1).unwrap().m.unwrap();
    assert_eq!(v["m_used"].as_u64().unwrap() as usize, expected);

    let c = json_stdout(&shifttest(&["choose-m", cfg.to_str().unwrap()]));
    assert_eq!(c["finite_bound"]["max_m"].as_u64().unwrap() as usize, expected);
}

#[test]
fn experiment_csv_is_independent_of_threads() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_shifttest"))
            .args(["experiment", "ipw_compare", "--replications", "30", "--seed", "9", "--set", "mu=1,4"])
            .env("SHIFTTEST_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "n,mu,method,rejection_rate,mc_stderr,mean_m_used,replications");
    assert_eq!(text.lines().count(), 1 + 2 * 3);
}

#[test]
fn experiment_writes_metadata_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("off.csv");
    let o = shifttest(&[
        "experiment", "off_policy", "--replications", "2", "--set", "n=200", "--set", "variant=1", "--set", "delta=0",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("off.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["model"]["betas"].as_array().unwrap().len(), 4);
    assert_eq!(meta["experiment"], "off_policy");
}

#[test]
fn unknown_axis_is_an_error() {
    let o = shifttest(&["experiment", "thm2_counterexample", "--set", "nn=10"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown grid parameter"));
}

#[test]
fn simulate_presets() {
    let o = shifttest(&["simulate", "verma_gaussian", "--n", "25", "--theta", "0.3", "--seed", "2"]);
    assert!(o.status.success());
    let d = Dataset::read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(d.n_rows(), 25);
    assert_eq!(d.columns(), ["x1", "x2", "x3", "x4"]);
    assert!(!shifttest(&["simulate", "no_such_model", "--n", "5"]).status.success());
}
