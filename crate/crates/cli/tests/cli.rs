//! End-to-end tests of the binary: exit codes, JSON shapes, file formats.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn nilsol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilsol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("nilsol-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{}-{}", std::process::id(), name));
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        !out.stdout.is_empty(),
        "no stdout; stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn pre_einstein_heisenberg_is_exact() {
    let path = write_temp("h3.txt", "q=2 p=1; 121");
    let out = nilsol(&["pre-einstein", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["phi_diagonal"], serde_json::json!(["2/3", "2/3", "4/3"]));
    assert_eq!(v["eq2"]["phi_positive"], Value::Bool(true));
    assert_eq!(v["eq2"]["ad_phi_nonneg"], Value::Bool(true));
}

#[test]
fn pre_einstein_twelve_dim_witness() {
    let json = {
        // Build via the JSON schema: brackets with 1-based indices.
        let brackets = [
            (1, 3, 11),
            (2, 4, 11),
            (5, 9, 11),
            (6, 10, 11),
            (1, 4, 12),
            (5, 8, 12),
            (6, 9, 12),
            (7, 10, 12),
        ];
        let items: Vec<String> = brackets
            .iter()
            .map(|(i, j, k)| format!(r#"{{"i":{i},"j":{j},"k":{k},"c":"1"}}"#))
            .collect();
        format!(r#"{{"dim":12,"brackets":[{}]}}"#, items.join(","))
    };
    let path = write_temp("t210.json", &json);
    let out = nilsol(&["pre-einstein", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let phi: Vec<String> = v["phi_diagonal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect();
    assert_eq!(
        phi,
        vec![
            "43/55", "42/55", "42/55", "43/55", "42/55", "43/55", "4/5", "4/5", "43/55", "42/55",
            "17/11", "86/55"
        ]
    );
    assert_eq!(v["eq2"]["ad_phi_nonneg"], Value::Bool(false));
    assert_eq!(v["eq2"]["witness"]["eigenvalue"], "-1/55");
}

#[test]
fn classify_exit_codes() {
    let h3 = write_temp("h3b.txt", "q=2 p=1; 121");
    let out = nilsol(&["classify", h3.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "EinsteinNilradical");
    let c = v["c"].as_f64().unwrap();
    assert!((c + 1.5).abs() < 1e-6);

    // Dual of catalog 102: rejected with an exact positivity certificate.
    let dual = write_temp("dual102.txt", "q=5 p=7; 141,152,243,254,345,356,457");
    let out = nilsol(&["classify", dual.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "NotEinsteinNilradical");
    assert_eq!(v["certificate"]["kind"], "alpha_infeasible");

    // Unparseable input: data error.
    let bad = write_temp("bad.txt", "this is not an algebra");
    let out = nilsol(&["classify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));

    // Unknown flag: usage error.
    let out = nilsol(&["classify", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn nice_check_shapes() {
    let l78 = write_temp("gt78.txt", "q=5 p=3; 131,153,231,242");
    let out = nilsol(&["nice-check", l78.to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["nice"], Value::Bool(false));
    assert_eq!(v["verdict"], "NotNice");

    let f32 = write_temp("f32.txt", "q=3 p=3; 121,132,233");
    let out = nilsol(&["nice-check", f32.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["nice"], Value::Bool(true));
    assert_eq!(v["m"], 3);
    assert_eq!(v["rankY"], 3);
    assert_eq!(v["verdict"], "EinsteinNilradical");
    assert_eq!(v["alpha"], serde_json::json!(["1/5", "1/5", "1/5"]));
}

#[test]
fn flow_with_trace() {
    let path = write_temp(
        "sum.json",
        r#"{"dim":6,"brackets":[{"i":1,"j":2,"k":5,"c":"1"},{"i":3,"j":4,"k":6,"c":"2"}]}"#,
    );
    let trace = std::env::temp_dir().join(format!("nilsol-trace-{}.csv", std::process::id()));
    let out = nilsol(&[
        "flow",
        path.to_str().unwrap(),
        "--json",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["tag"], "Converged");
    assert!((v["f_min"].as_f64().unwrap() - 8.0).abs() < 1e-5);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("iteration,f,residual\n"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn flow_gate_rejects() {
    let json = r#"{"dim":12,"brackets":[
        {"i":1,"j":3,"k":11,"c":"1"},{"i":2,"j":4,"k":11,"c":"1"},
        {"i":5,"j":9,"k":11,"c":"1"},{"i":6,"j":10,"k":11,"c":"1"},
        {"i":1,"j":4,"k":12,"c":"1"},{"i":5,"j":8,"k":12,"c":"1"},
        {"i":6,"j":9,"k":12,"c":"1"},{"i":7,"j":10,"k":12,"c":"1"}]}"#;
    let path = write_temp("t210b.json", json);
    let out = nilsol(&["flow", path.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["tag"], "GateRejected");
}

#[test]
fn nilsoliton_verify_command() {
    let h3 = write_temp("h3c.txt", "q=2 p=1; 121");
    let metric = write_temp(
        "id3.json",
        r#"{"gram": [["1","0","0"],["0","1","0"],["0","0","1"]]}"#,
    );
    let out = nilsol(&[
        "nilsoliton-verify",
        h3.to_str().unwrap(),
        "--metric",
        metric.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!((v["c"].as_f64().unwrap() + 1.5).abs() < 1e-9);

    // Orthonormal-basis form of the metric file.
    let frame = write_temp(
        "frame.json",
        r#"{"orthonormal_basis": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]}"#,
    );
    let out = nilsol(&[
        "nilsoliton-verify",
        h3.to_str().unwrap(),
        "--metric",
        frame.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn two_step_commands() {
    // Deterministic sampling.
    let a = nilsol(&["two-step", "sample", "--p", "2", "--q", "4", "--seed", "11"]);
    let b = nilsol(&["two-step", "sample", "--p", "2", "--q", "4", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["p"], 2);
    assert_eq!(v["q"], 4);

    // Dual of catalog 102 from its algebra file.
    let l102 = write_temp("gt102.txt", "q=5 p=3; 121,132,233");
    let out = nilsol(&["two-step", "dual", l102.to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["p"], 7);
    assert_eq!(v["q"], 5);

    // Tiny survey: every (1,2) sample converges.
    let csv = std::env::temp_dir().join(format!("nilsol-survey-{}.csv", std::process::id()));
    let out = nilsol(&[
        "two-step",
        "survey",
        "--p",
        "1",
        "--q",
        "2",
        "--samples",
        "3",
        "--seed",
        "5",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["converged"], 3);
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 4);
}

#[test]
fn corpus_commands() {
    let out = nilsol(&["corpus", "list", "--json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 26);
    assert_eq!(entries[0]["id"], "h3");
}

#[test]
fn algebra_json_roundtrip_via_files() {
    // classify must accept both formats of the same algebra and agree.
    let text = write_temp("h3h3.txt", "q=4 p=2; 121,342");
    let json = write_temp(
        "h3h3.json",
        r#"{"dim":6,"brackets":[{"i":1,"j":2,"k":5,"c":"1"},{"i":3,"j":4,"k":6,"c":"1"}]}"#,
    );
    let a = nilsol(&["classify", text.to_str().unwrap(), "--json"]);
    let b = nilsol(&["classify", json.to_str().unwrap(), "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let va = stdout_json(&a);
    let vb = stdout_json(&b);
    assert_eq!(va["pre_einstein"], vb["pre_einstein"]);
    assert_eq!(va["verdict"], vb["verdict"]);
}

#[test]
fn classify_is_deterministic() {
    let path = write_temp("det.txt", "q=5 p=3; 131,153,231,242");
    let a = nilsol(&["classify", path.to_str().unwrap(), "--json"]);
    let b = nilsol(&["classify", path.to_str().unwrap(), "--json"]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(
        a.stdout, b.stdout,
        "classification must be byte-reproducible"
    );
}

#[test]
fn unsupported_basis_exits_66() {
    // h3 presented with [e1,e2] = e1+e3, [e2,e3] = e1+e3: the pre-Einstein
    // derivation is not diagonal in this basis.
    let json = r#"{"dim":3,"brackets":[
        {"i":1,"j":2,"k":1,"c":"1"},{"i":1,"j":2,"k":3,"c":"1"},
        {"i":2,"j":3,"k":1,"c":"1"},{"i":2,"j":3,"k":3,"c":"1"}]}"#;
    let path = write_temp("sheared.json", json);
    for cmd in ["pre-einstein", "classify"] {
        let out = nilsol(&[cmd, path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(66), "{cmd}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("maximal torus"), "{err}");
    }
}

#[test]
fn dual_accepts_tuple_files() {
    // The vectorized form of the free two-step algebra on 3 generators.
    let tuple = r#"{"q":3,"p":3,"matrices":[
        [["0","1","0"],["-1","0","0"],["0","0","0"]],
        [["0","0","1"],["0","0","0"],["-1","0","0"]],
        [["0","0","0"],["0","0","1"],["0","-1","0"]]]}"#;
    let path = write_temp("f32tuple.json", tuple);
    let out = nilsol(&["two-step", "dual", path.to_str().unwrap()]);
    // Full tuple: the dual is empty and must be reported as an error.
    assert_eq!(out.status.code(), Some(65));

    let partial = r#"{"q":3,"p":1,"matrices":[
        [["0","1","0"],["-1","0","0"],["0","0","0"]]]}"#;
    let path = write_temp("h3in3.json", partial);
    let out = nilsol(&["two-step", "dual", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["p"], 2);
}

#[test]
fn corpus_run_json_shape() {
    let out = nilsol(&["corpus", "run", "--json"]);
    let v = stdout_json(&out);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 26);
    for row in rows {
        assert!(row["verdict_ok"].as_bool().unwrap(), "{row}");
    }
    // All classification verdicts match expectations, so exit 0 even
    // though five bundled frames are inconsistent.
    assert_eq!(out.status.code(), Some(0));
    let failing: Vec<&str> = rows
        .iter()
        .filter(|r| r["frame_pass"] == serde_json::json!(false))
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(failing, vec!["gt26", "gt26s", "gt28s", "gt44s", "gt55s"]);
}
