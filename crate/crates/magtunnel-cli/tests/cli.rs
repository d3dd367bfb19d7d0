use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("magtunnel-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], config: Option<&str>, name: &str) -> (Output, PathBuf) {
    let dir = scratch(name);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_magtunnel"));
    cmd.args(args);
    if let Some(text) = config {
        let path = dir.join("run.cfg");
        std::fs::write(&path, text).unwrap();
        cmd.arg(&path);
    }
    (cmd.output().unwrap(), dir)
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn derive_params_defaults_and_determinism() {
    let (a, _) = run(&["derive-params", "--no-timestamp"], None, "derive-a");
    let (b, _) = run(&["derive-params", "--no-timestamp"], None, "derive-b");
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    assert_eq!(doc["tool"], "magtunnel");
    assert_eq!(doc["command"], "derive-params");
    assert!(doc.get("timestamp_unix").is_none());
    assert_eq!(doc["grid"]["n"].as_u64().unwrap() % 2, 1);

    let (c, _) = run(&["derive-params"], None, "derive-c");
    assert!(json(&c)["timestamp_unix"].is_u64());
}

#[test]
fn config_errors_are_usage_errors() {
    let (out, _) = run(&["derive-params"], Some("lambda = 4\nbogus = 1\n"), "unknown");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let (out, _) = run(&["derive-params"], Some("lambda = 4\nlambda = 5\n"), "dup");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("duplicate"));

    let (out, _) = run(&["derive-params"], Some("just words\n"), "syntax");
    assert_eq!(code(&out), 2);

    let (out, _) = run(&["derive-params"], Some("tol = fast\n"), "badvalue");
    assert_eq!(code(&out), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_magtunnel"))
        .args(["derive-params", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn kernel_check_passes_and_flags_broken_quadrature() {
    let (out, _) = run(&["kernel-check", "--no-timestamp"], None, "kernel-ok");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (out, _) = run(&["kernel-check", "--no-timestamp"], Some("quad_rel_tol = 0.5\n"), "kernel-bad");
    assert_eq!(code(&out), 1);
}

#[test]
fn single_point_sweep_table_and_files() {
    let (out, dir) = run(&["sweep", "--no-timestamp"], Some("ybar_list = 0.1\n"), "sweep");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "ybar,rho_re,rho_im,S,Delta,E_even,E_odd,predicted_cos");
    assert_eq!(rows.len(), 2);
    let s: f64 = rows[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!(s > 0.0);

    let report = dir.join("sweep.json");
    let (out, _) = run(
        &["sweep", "--no-timestamp", "--output", report.to_str().unwrap()],
        Some("ybar_list = 0.1\n"),
        "sweep-out",
    );
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["command"], "sweep");
    assert_eq!(std::fs::read_to_string(report.with_extension("csv")).unwrap(), table);
}

#[test]
fn sweep_and_bisection_reject_bad_inputs() {
    let (out, _) = run(&["sweep"], Some("ybar_list =\n"), "empty");
    assert_eq!(code(&out), 2);
    let (out, _) = run(&["sweep"], Some("ybar_list = 0.1, 1.5\n"), "range");
    assert_eq!(code(&out), 2);
    let (out, _) = run(&["find-degeneracy"], Some("bracket = 0.3, 0.2\n"), "reversed");
    assert_eq!(code(&out), 2);
    let (out, _) = run(&["find-degeneracy"], Some("bracket = 0.25, 0.3\n"), "nosign");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).to_lowercase().contains("sign"), "{}", stderr(&out));
}

#[test]
fn sho_spectrum() {
    let (out, _) = run(&["spectrum", "--no-timestamp"], Some("well = sho\nn = 121\nL = 6\ntol = 1e-9\n"), "sho");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    let e: Vec<f64> = doc["result"]["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in e.iter().zip([4.0, 8.0, 8.0, 12.0]) {
        assert!((got - want).abs() / want < 0.01, "{e:?}");
    }
}

#[test]
fn decay_fit_outside_data_floor_is_numerical_failure() {
    let (out, _) = run(&["decay-fit"], Some("annulus = 6.5, 7.0\n"), "decay-floor");
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let (out, _) = run(&["decay-fit", "--no-timestamp"], None, "decay-ok");
    assert_eq!(code(&out), 0);
    let slope = json(&out)["result"]["fit"]["slope"].as_f64().unwrap();
    assert!((slope / -1.5 - 1.0).abs() <= 0.15);
}
