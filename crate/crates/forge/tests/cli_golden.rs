//! Subprocess tests for the command-line front end: determinism, exit
//! codes, error-kind mapping, and the report formats.

use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_poisson-forge"))
        .args(args)
        .env("POISSON_FORGE_SEED", "7")
        .output()
        .expect("failed to run poisson-forge");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).to_string(),
        String::from_utf8_lossy(&out.stderr).to_string(),
    )
}

#[test]
fn demo_corpus_passes_and_is_deterministic() {
    let (code, out1, _) = run(&["demo"]);
    assert_eq!(code, 0, "demo corpus must pass");
    let (code2, out2, _) = run(&["demo"]);
    assert_eq!(code2, 0);
    assert_eq!(out1, out2, "demo output must be byte-identical across runs");
    let parsed: serde_json::Value = serde_json::from_str(&out1).unwrap();
    assert_eq!(parsed["status"], "pass");
    assert_eq!(parsed["seed"], 7);
}

#[test]
fn demo_list_names() {
    let (code, out, _) = run(&["demo", "--list", "--format", "text"]);
    assert_eq!(code, 0);
    for name in ["jacobi-so3", "weinstein", "nontame", "equivariant"] {
        assert!(out.contains(name), "missing demo {name}");
    }
}

#[test]
fn jacobi_pass_and_fail() {
    // bundled so(3) input passes with exit 0
    let (code, out, _) = run(&["jacobi", "crates/forge/assets/so3.json", "--format", "text"]);
    // tests run from the crate root, so use the manifest-relative path
    let (code, out) = if code == 2 {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/so3.json");
        let (c, o, _) = run(&["jacobi", path, "--format", "text"]);
        (c, o)
    } else {
        (code, out)
    };
    assert_eq!(code, 0);
    assert!(out.contains("jacobi: pass"));

    // a planted violation fails with exit 1 and a certificate
    let bad = r#"{
        "vars": ["x", "y", "z"], "order": 6, "degree": 2,
        "components": [
            {"idx": [0,1], "jet": {"vars":["x","y","z"],"order":6,"terms":[{"mono":[1,0,0],"coeff":"1"}]}},
            {"idx": [1,2], "jet": {"vars":["x","y","z"],"order":6,"terms":[{"mono":[0,1,0],"coeff":"1"}]}},
            {"idx": [0,2], "jet": {"vars":["x","y","z"],"order":6,"terms":[{"mono":[0,0,1],"coeff":"-1"}]}}
        ]
    }"#;
    let (code, out, _) = run(&["jacobi", bad]);
    assert_eq!(code, 1);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(parsed["status"], "fail");
    assert!(parsed["stages"][0]["certificate"].is_object());
}

#[test]
fn split_reports_chart_rank_transverse() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/weinstein.json");
    let (code, out, _) = run(&["split", path]);
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(parsed["result"]["symplectic_rank"], 2);
    assert!(parsed["result"]["chart"]["components"].is_array());
    assert!(parsed["result"]["transverse"]["components"].is_array());
}

#[test]
fn divide_rejects_non_tangent_with_stable_kind() {
    // the Euler field on so(3) is not tangent: error kind NotTangent, exit 2
    let euler = r#"{
        "vars": ["x", "y", "z"], "order": 6, "degree": 1,
        "components": [
            {"idx": [0], "jet": {"vars":["x","y","z"],"order":6,"terms":[{"mono":[1,0,0],"coeff":"1"}]}},
            {"idx": [1], "jet": {"vars":["x","y","z"],"order":6,"terms":[{"mono":[0,1,0],"coeff":"1"}]}},
            {"idx": [2], "jet": {"vars":["x","y","z"],"order":6,"terms":[{"mono":[0,0,1],"coeff":"1"}]}}
        ]
    }"#;
    let (code, out, _) = run(&["divide", "--model", "so3", euler]);
    assert_eq!(code, 2);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(parsed["status"], "error");
    assert_eq!(parsed["error"]["kind"], "NotTangent");
}

#[test]
fn schema_errors_are_reported() {
    // zero denominator in a coefficient
    let bad = r#"{"vars":["x"],"order":4,"degree":2,"components":[
        {"idx":[0],"jet":{"vars":["x"],"order":4,"terms":[{"mono":[1],"coeff":"1/0"}]}}]}"#;
    let (code, out, _) = run(&["jacobi", bad]);
    assert_eq!(code, 2);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(parsed["error"]["kind"], "SchemaError");

    // unknown field named in the message
    let unknown = r#"{"vars":["x"],"order":4,"degree":2,"components":[],"wat":1}"#;
    let (code, out, _) = run(&["jacobi", unknown]);
    assert_eq!(code, 2);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(parsed["error"]["message"]
        .as_str()
        .unwrap()
        .contains("wat"));
}

#[test]
fn usage_errors_exit_3() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 3);
    assert!(!err.is_empty());
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("pf_out_test");
    let _ = std::fs::create_dir_all(&dir);
    let path = dir.join("report.json");
    let path_s = path.to_str().unwrap();
    let (code, out, _) = run(&["demo", "jacobi-so3", "--out", path_s]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["status"], "pass");
}

#[test]
fn equivariant_split_demo_runs_pipeline() {
    let (code, out, _) = run(&["demo", "equivariant"]);
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = parsed["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    for expected in [
        "validate-action",
        "block-normalize",
        "normalize-foliation",
        "interpolate",
        "moser-average",
        "flow",
        "verify-split-form",
        "verify-equivariance",
    ] {
        assert!(names.contains(&expected), "missing stage {expected}");
    }
}
