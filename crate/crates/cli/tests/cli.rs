use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tvprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvprox"))
        .args(args)
        .env_remove("TVPROX_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1, "{text}");
    serde_json::from_str(text.trim()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn lists_builtin_scenarios() {
    let out = tvprox(&["list-scenarios"]);
    assert_eq!(code(&out), 0);
    let names = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = names.lines().collect();
    assert_eq!(names.len(), 6);
    assert!(names.contains(&"consensus15"));
    assert!(names.contains(&"example2:alt"));
}

#[test]
fn unknown_scenario_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = tvprox(&["run", "--scenario", "no-such-game", "--out", path_str(&dir.path().join("t.csv"))]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn unreadable_or_malformed_config_exits_3() {
    let dir = TempDir::new().unwrap();
    let out_csv = dir.path().join("t.csv");
    let missing = dir.path().join("missing.json");
    let out = tvprox(&["run", "--scenario", "example1", "--params", path_str(&missing), "--out", path_str(&out_csv)]);
    assert_eq!(code(&out), 3);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"delta\": [1.0, 1.0], \"beta\": ").unwrap();
    let out = tvprox(&["run", "--scenario", "example1", "--params", path_str(&bad), "--out", path_str(&out_csv)]);
    assert_eq!(code(&out), 3);

    let scen = dir.path().join("scenario.json");
    fs::write(&scen, "[1, 2, 3]").unwrap();
    let out = tvprox(&["run", "--scenario", path_str(&scen), "--out", path_str(&out_csv)]);
    assert_eq!(code(&out), 3);
}

#[test]
fn scenario_with_bad_row_sums_is_rejected() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("a1.json");
    assert_eq!(code(&tvprox(&["dump-scenario", "--name", "example2:A1", "--out", path_str(&file)])), 0);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    v["network"]["matrix"][0][1] = Value::from(0.6);
    fs::write(&file, v.to_string()).unwrap();
    let out = tvprox(&["run", "--scenario", path_str(&file), "--out", path_str(&dir.path().join("t.csv"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn divergence_exits_4() {
    let dir = TempDir::new().unwrap();
    let params = dir.path().join("p.json");
    fs::write(&params, r#"{"delta": [1.0, 1.0], "beta": 1.0, "gamma": 1e200}"#).unwrap();
    let out_csv = dir.path().join("t.csv");
    let out = tvprox(&["run", "--scenario", "example2:A1", "--params", path_str(&params), "--out", path_str(&out_csv)]);
    assert_eq!(code(&out), 4);
    // the trace up to the blow-up is still written
    assert!(csv_rows(&out_csv).len() >= 2);
}

#[test]
fn strict_mode_rejects_violating_parameters() {
    let dir = TempDir::new().unwrap();
    let params = dir.path().join("p.json");
    fs::write(&params, r#"{"delta": [1.0, 1.0], "beta": 1.0, "gamma": 10.0}"#).unwrap();
    let out_csv = dir.path().join("t.csv");
    let args = ["run", "--scenario", "example2:A1", "--params", path_str(&params), "--out", path_str(&out_csv)];
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&tvprox(&strict)), 1);
    let lenient = tvprox(&args);
    assert_ne!(code(&lenient), 1);
    assert!(csv_rows(&out_csv)[1].ends_with(",false"));
}

#[test]
fn check_params_reports_four_rows() {
    let ok = tvprox(&["check-params", "--scenario", "consensus15", "--k", "3"]);
    assert_eq!(code(&ok), 0);
    let text = String::from_utf8(ok.stdout).unwrap();
    for row in ["(a)", "(b)", "(c)", "(d)"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(row) && l.ends_with("ok")), "{text}");
    }

    let dir = TempDir::new().unwrap();
    let params = dir.path().join("p.json");
    fs::write(&params, r#"{"delta": [1.0, 1.0], "beta": 1.0, "gamma": 10.0}"#).unwrap();
    let bad = tvprox(&["check-params", "--scenario", "example2:A1", "--params", path_str(&params)]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8(bad.stdout).unwrap().contains("FAIL"));
}

#[test]
fn zero_iterations_write_header_and_initial_row() {
    let dir = TempDir::new().unwrap();
    let out_csv = dir.path().join("t.csv");
    let out = tvprox(&["run", "--scenario", "example3", "--iters", "0", "--out", path_str(&out_csv)]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&out_csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "k,fp_residual,consensus_residual,max_violation,sigma_norm,gamma,bounds_ok");
    assert!(rows[1].starts_with("0,"));
    assert_eq!(summary(&out)["iters_used"], 0);
}

#[test]
fn best_response_reaches_example2_equilibrium() {
    let dir = TempDir::new().unwrap();
    let out_csv = dir.path().join("br.csv");
    for spelling in ["best_response", "best-response"] {
        let out = tvprox(&[
            "run", "--scenario", "example2:A1", "--dynamics", spelling, "--iters", "200", "--out", path_str(&out_csv),
        ]);
        assert_eq!(code(&out), 0);
        let s = summary(&out);
        let x: Vec<f64> = s["final_x"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!((x[0] - 1.25).abs() <= 1e-8 && (x[1] - 1.75).abs() <= 1e-8, "{x:?}");
        assert_eq!(s["certified"], true);
    }
}

#[test]
fn consensus_run_is_complete_feasible_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "run".to_owned(),
            "--scenario".into(),
            "consensus15".into(),
            "--iters".into(),
            "5000".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            path_str(p).to_owned(),
        ]
    };
    let run = |p: &Path| {
        Command::new(env!("CARGO_BIN_EXE_tvprox"))
            .args(args(p))
            .env_remove("TVPROX_OUT_DIR")
            .output()
            .unwrap()
    };
    let out = run(&first);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&first);
    assert_eq!(rows.len(), 5002);
    let s = summary(&out);
    assert!(s["final_violation"].as_f64().unwrap() <= 1e-6);
    assert_eq!(s["iters_used"], 5000);
    assert_eq!(code(&run(&second)), 0);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn dumped_scenarios_reload_identically() {
    let dir = TempDir::new().unwrap();
    for name in ["example1", "example3", "consensus15"] {
        let file = dir.path().join(format!("{}.json", name.replace(':', "_")));
        assert_eq!(code(&tvprox(&["dump-scenario", "--name", name, "--out", path_str(&file)])), 0);
        let from_name = dir.path().join("name.csv");
        let from_file = dir.path().join("file.csv");
        assert_eq!(code(&tvprox(&["run", "--scenario", name, "--iters", "50", "--out", path_str(&from_name)])), 0);
        assert_eq!(
            code(&tvprox(&["run", "--scenario", path_str(&file), "--iters", "50", "--out", path_str(&from_file)])),
            0
        );
        assert_eq!(fs::read(&from_name).unwrap(), fs::read(&from_file).unwrap(), "{name}");

        let again = dir.path().join("again.json");
        assert_eq!(code(&tvprox(&["dump-scenario", "--name", name, "--out", path_str(&again)])), 0);
        assert_eq!(fs::read(&file).unwrap(), fs::read(&again).unwrap());
    }
}

#[test]
fn output_directory_override() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tvprox"))
        .args(["run", "--scenario", "example1", "--iters", "3", "--out", "nested/trace.csv"])
        .env("TVPROX_OUT_DIR", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(csv_rows(&dir.path().join("trace.csv")).len(), 5);
    assert!(!dir.path().join("nested").exists());
}
