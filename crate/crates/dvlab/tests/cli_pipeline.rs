//! End-to-end CLI tests: JSON piping between subcommands, canonical
//! (byte-identical) output, and the documented exit codes.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn dvlab(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dvlab"));
    cmd.args(args).stdout(Stdio::piped()).stderr(Stdio::piped());
    if stdin.is_some() {
        cmd.stdin(Stdio::piped());
    } else {
        cmd.stdin(Stdio::null());
    }
    let mut child = cmd.spawn().expect("spawn dvlab");
    if let Some(input) = stdin {
        child.stdin.as_mut().unwrap().write_all(input.as_bytes()).unwrap();
    }
    child.wait_with_output().expect("dvlab did not run")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gmn_pipes_into_newton() {
    let module = dvlab(&["gmn", "--m", "1", "--n", "1", "--p", "2", "--N", "4"], None);
    assert_eq!(module.status.code(), Some(0));
    let polygon = dvlab(&["newton"], Some(&stdout_str(&module)));
    assert_eq!(polygon.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&polygon)).unwrap();
    assert_eq!(v["polygon"][0]["slope"], "1/2");
    assert_eq!(v["polygon"][0]["mult"], 2);
}

#[test]
fn csd_check_on_g11() {
    let module = dvlab(&["gmn", "--m", "1", "--n", "1", "--p", "2", "--N", "5"], None);
    let check = dvlab(&["csd-check", "--s", "2", "--r", "1"], Some(&stdout_str(&module)));
    assert_eq!(check.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&check)).unwrap();
    assert_eq!(v["csd"], true);
    // a failing pair reports the first broken condition
    let check = dvlab(&["csd-check", "--s", "1", "--r", "1"], Some(&stdout_str(&module)));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&check)).unwrap();
    assert_eq!(v["csd"], false);
}

#[test]
fn insufficient_precision_exits_one() {
    let module = dvlab(&["gmn", "--m", "1", "--n", "1", "--p", "2", "--N", "1"], None);
    assert_eq!(module.status.code(), Some(0));
    let polygon = dvlab(&["newton"], Some(&stdout_str(&module)));
    assert_eq!(polygon.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&polygon)).unwrap();
    assert_eq!(v["error"], "InsufficientPrecision");
}

#[test]
fn not_prime_exits_one_and_usage_exits_two() {
    let bad = dvlab(&["ring", "--p", "4", "--a", "1", "--N", "1"], None);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&bad)).unwrap();
    assert_eq!(v["error"], "NotPrime");

    let usage = dvlab(&["gmn", "--m", "1"], None);
    assert_eq!(usage.status.code(), Some(2));

    let unknown = dvlab(&["frobnicate"], None);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn filtration_saturate_split_descend_enumerate() {
    // a rank-5 two-slope module via the library, round-tripped as JSON
    let module = dvlab(&["gmn", "--m", "1", "--n", "1", "--p", "2", "--N", "8"], None);
    let filt = dvlab(&["filtration"], Some(&stdout_str(&module)));
    assert_eq!(filt.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&filt)).unwrap();
    assert_eq!(v["slopes"][0], "1/2");

    let sat = dvlab(&["saturate"], Some(&stdout_str(&module)));
    assert_eq!(sat.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&sat)).unwrap();
    assert_eq!(v["log_degree"], 0);

    let split = dvlab(&["split"], Some(&stdout_str(&module)));
    assert_eq!(split.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&split)).unwrap();
    assert_eq!(v["summands"].as_array().unwrap().len(), 1);

    // base-changed module: gmn over F_p^2, then descend and enumerate
    let module2 = dvlab(&["gmn", "--m", "1", "--n", "1", "--p", "2", "--a", "2", "--N", "6"], None);
    let descent = dvlab(&["descend", "--s", "2", "--r", "1"], Some(&stdout_str(&module2)));
    assert_eq!(descent.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&descent)).unwrap();
    assert_eq!(v["model_field_degree"], 2);

    let found = dvlab(&["enumerate", "--log-d", "1", "--s", "2", "--r", "1"], Some(&stdout_str(&module2)));
    assert_eq!(found.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&found)).unwrap();
    assert_eq!(v["count"], 5); // p^2 + 1 for p = 2
}

#[test]
fn input_flag_and_malformed_json() {
    let module = dvlab(&["gmn", "--m", "2", "--n", "1", "--p", "3", "--N", "5"], None);
    let dir = std::env::temp_dir().join("dvlab_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("module.json");
    std::fs::write(&path, stdout_str(&module)).unwrap();
    let polygon = dvlab(&["newton", "--input", path.to_str().unwrap()], None);
    assert_eq!(polygon.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&polygon)).unwrap();
    assert_eq!(v["polygon"][0]["slope"], "2/3");

    // malformed JSON and structurally wrong documents exit 2 (parse errors)
    let bad = dvlab(&["newton"], Some("{ not json"));
    assert_eq!(bad.status.code(), Some(2));
    let bad = dvlab(&["newton"], Some("{\"rank\": 2}"));
    assert_eq!(bad.status.code(), Some(2));
    // FV != p is a mathematical rejection of the document
    let mut v: serde_json::Value = serde_json::from_str(&stdout_str(&module)).unwrap();
    v["V"][0][0] = serde_json::json!(["1"]);
    let bad = dvlab(&["newton"], Some(&v.to_string()));
    assert_eq!(bad.status.code(), Some(1));

    let missing = dvlab(&["newton", "--input", "/nonexistent/nope.json"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn example_commands_and_determinism() {
    let fam = dvlab(&["example41", "--p", "2"], None);
    assert_eq!(fam.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&fam)).unwrap();
    assert_eq!(v["constant_polygon"], true);
    assert_eq!(v["fibers"][0]["xi_kernel_log_order"], 1);

    let glued = dvlab(&["example42", "--p", "2"], None);
    assert_eq!(glued.status.code(), Some(0));

    // verify42 output is byte-identical between sequential and parallel runs
    let run1 = dvlab(&["verify42", "--p", "2", "--N", "6", "--log-d-max", "2"], None);
    assert_eq!(run1.status.code(), Some(0));
    let run2 = dvlab(&["verify42", "--p", "2", "--N", "6", "--log-d-max", "2", "--parallel", "4"], None);
    assert_eq!(run2.status.code(), Some(0));
    assert_eq!(stdout_str(&run1).into_bytes(), stdout_str(&run2).into_bytes());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&run1)).unwrap();
    assert_eq!(v["conclusion"]["uniform_mismatch"], true);
    assert_eq!(v["conclusion"]["no_glued_csd_isogeny_up_to"], 2);
}
