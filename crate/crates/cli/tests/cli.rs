use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn graphs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../graphs")
}

fn graph(name: &str) -> String {
    graphs().join(name).to_string_lossy().into_owned()
}

fn fiberwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiberwave"))
        .args(args)
        .env_remove("FIBERWAVE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_dirichlet_one_gives_minus_one() {
    let o = fiberwave(&["solve", &graph("dirichlet_one.json"), "--lambda", "2", "--eps", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["t"], serde_json::json!([[[-1.0, 0.0]]]));
    assert_eq!(v["certified"], Value::Bool(true));
    assert_eq!(v["ordering"], serde_json::json!([[0, 0]]));
}

#[test]
fn solve_single_incident_column() {
    let o = fiberwave(&[
        "solve", &graph("fabry_perot.json"), "--lambda", "2", "--eps", "0.1", "--channel", "2", "--mode", "0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["columns"], serde_json::json!([[2, 0]]));
    assert_eq!(v["t"].as_array().unwrap().len(), 2);
    assert_eq!(v["t"][0].as_array().unwrap().len(), 1);
}

#[test]
fn resonant_solve_needs_allow_flagged() {
    let lambda = format!("{}", 1.0 + (std::f64::consts::PI * 0.1).powi(2));
    let args = ["solve", &graph("dirichlet_edge.json"), "--lambda", &lambda, "--eps", "0.1"];
    let o = fiberwave(&args);
    assert_eq!(code(&o), 3);
    assert!(o.stdout.is_empty());
    let mut allowed = args.to_vec();
    allowed.push("--allow-flagged");
    let o = fiberwave(&allowed);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["certified"], Value::Bool(false));
}

#[test]
fn sweep_flags_edge_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let out_s = out.to_string_lossy().into_owned();
    let args = [
        "sweep", &graph("dirichlet_edge.json"), "--lo", "1.05", "--hi", "2", "--steps", "100", "--eps", "0.1", "-o", &out_s,
    ];
    let o = fiberwave(&args);
    assert_eq!(code(&o), 3);
    let csv = std::fs::read_to_string(&out).unwrap();
    let flagged: Vec<f64> = csv
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",0"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let step = 0.95 / 99.0;
    for e in [1.0987, 1.3948, 1.8883] {
        assert!(flagged.iter().any(|f| (f - e).abs() <= step), "{e} not flagged in {flagged:?}");
    }
    assert!(flagged.iter().all(|f| [1.0987, 1.3948, 1.8883].iter().any(|e| (f - e).abs() <= step)));

    let mut allowed = args.to_vec();
    allowed.push("--allow-flagged");
    assert_eq!(code(&fiberwave(&allowed)), 0);
}

#[test]
fn sweep_honors_thread_cap() {
    let o = Command::new(env!("CARGO_BIN_EXE_fiberwave"))
        .args(["sweep", &graph("fabry_perot.json"), "--lo", "1.5", "--hi", "2.5", "--steps", "5", "--eps", "0.1"])
        .env("FIBERWAVE_THREADS", "2")
        .output()
        .unwrap();
    // the matrix junction is only valid at lambda = 2, so the sweep fails as a numeric error
    assert_eq!(code(&o), 3);
    let o = fiberwave(&["--threads", "0", "sweep", &graph("dirichlet_one.json"), "--lo", "1.5", "--hi", "2.5", "--steps", "5", "--eps", "0.1"]);
    assert_eq!(code(&o), 2);
    let o = fiberwave(&["--threads", "1", "sweep", &graph("dirichlet_one.json"), "--lo", "1.5", "--hi", "2.5", "--steps", "5", "--eps", "0.1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn junction_block_is_deterministic_and_reusable() {
    let args = ["junction", "--geometry", &graph("cross.json"), "--lambda", "2", "--h", "0.049"];
    let a = fiberwave(&args);
    let b = fiberwave(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let block: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(block["kind"], "tabulated");
    assert_eq!(block["provenance"]["h"], 0.049);

    // a four-arm spider built on the table reproduces the table at its own lambda
    let w = 3.136;
    let channels: Vec<Value> = (0..4)
        .map(|i| serde_json::json!({"id": i, "length": "inf", "cross_section": {"shape": "interval", "dims": [w]}, "start": 0, "end": null}))
        .collect();
    let g = serde_json::json!({
        "channels": channels,
        "vertices": [{"id": 0, "ends": [[0, "start"], [1, "start"], [2, "start"], [3, "start"]], "junction": block}],
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spider.json");
    std::fs::write(&path, g.to_string()).unwrap();
    let o = fiberwave(&["solve", &path.to_string_lossy(), "--lambda", "2", "--eps", "0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t = v["t"].as_array().unwrap();
    let m = block["table"][0]["matrix"].as_array().unwrap();
    for r in 0..4 {
        for c in 0..4 {
            for k in 0..2 {
                let x = t[r][c][k].as_f64().unwrap();
                let y = m[r][c][k].as_f64().unwrap();
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn junction_rejects_spacing_that_does_not_divide() {
    let o = fiberwave(&["junction", "--geometry", &graph("cross.json"), "--lambda", "2", "--h", "0.05"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_reports_violations() {
    let o = fiberwave(&["network-validate", &graph("dirichlet_edge.json"), "--lambda", "5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("M = 2"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(graphs().join("dirichlet_edge.json")).unwrap();
    let mut bad: Value = serde_json::from_str(&text).unwrap();
    // drop the far end of the finite channel, leaving it dangling and the vertex empty
    bad["vertices"][1]["ends"] = serde_json::json!([]);
    let bad = bad.to_string();
    std::fs::write(&path, bad).unwrap();
    let o = fiberwave(&["network-validate", &path.to_string_lossy()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stdout(&o).contains("violation"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"channels\": [\n    {\"id\": 0,,}\n  ]\n}\n").unwrap();
    let o = fiberwave(&["network-validate", &path.to_string_lossy()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn io_failures_exit_four() {
    let o = fiberwave(&["solve", "/nonexistent/graph.json", "--lambda", "2", "--eps", "0.1"]);
    assert_eq!(code(&o), 4);
    let o = fiberwave(&[
        "solve", &graph("dirichlet_one.json"), "--lambda", "2", "--eps", "0.1", "-o", "/nonexistent/dir/out.json",
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn check_table_passes_on_unitary_network() {
    let o = fiberwave(&["check", &graph("fabry_perot.json"), "--lambda", "2", "--eps", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("spider consistency at vertex 0"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn check_table_fails_on_lossy_junction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lossy.json");
    let g = serde_json::json!({
        "channels": [{"id": 0, "length": "inf", "cross_section": {"shape": "interval", "dims": [std::f64::consts::PI]}, "start": 0, "end": null}],
        "vertices": [{"id": 0, "ends": [[0, "start"]], "junction": {"kind": "matrix", "lambda": 2.0, "matrix": [[[-0.5, 0.0]]]}}],
    });
    std::fs::write(&path, g.to_string()).unwrap();
    let o = fiberwave(&["check", &path.to_string_lossy(), "--lambda", "2", "--eps", "0.1"]);
    assert_eq!(code(&o), 3);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("flux balance") && l.ends_with("FAIL")));
}
