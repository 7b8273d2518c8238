//! End-to-end tests against the compiled binary: every assertion goes through
//! argv, the JSON envelope, and the documented exit codes.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_hyporbit");

fn run(args: &[&str]) -> (i32, Value) {
    run_env(args, &[])
}

fn run_env(args: &[&str], envs: &[(&str, &str)]) -> (i32, Value) {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    let code = out.status.code().unwrap_or(-1);
    let doc = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("non-JSON output ({e}): {:?}", String::from_utf8_lossy(&out.stdout)));
    (code, doc)
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("hyporbit-cli-{}-{name}", std::process::id()))
}

fn f64_of(v: &Value) -> f64 {
    v.as_str().expect("decimal string").parse().expect("parses as f64")
}

#[test]
fn build_emits_preset_members() {
    let (code, doc) = run(&["build", "--family", "jordan-r2x4"]);
    assert_eq!(code, 0, "{doc}");
    let r = &doc["result"];
    assert_eq!(r["family"], "jordan-r2x4");
    assert_eq!(r["dim"], 2);
    assert_eq!(r["commute_check"]["ok"], true);
    let members = r["members"].as_array().unwrap();
    assert_eq!(members.len(), 4);
    // Diagonals of the first and third members: a = -1/sqrt(2) and 1/a.
    let e00 = |i: usize| members[i]["entries"][0][0].as_str().unwrap();
    assert!(e00(0).starts_with("-7.0710678118654752"), "{}", e00(0));
    assert!(e00(2).starts_with("-1.4142135623730950"), "{}", e00(2));
    assert_eq!(e00(3), "1e0");
}

#[test]
fn build_scales_block_families() {
    for (blocks, members, dim) in [("2", 4, 4), ("3", 6, 6)] {
        let (code, doc) = run(&["build", "--family", "even-n", "--blocks", blocks]);
        assert_eq!(code, 0, "{doc}");
        let r = &doc["result"];
        assert_eq!(r["dim"], dim);
        let list = r["members"].as_array().unwrap();
        assert_eq!(list.len(), members);
        for m in list {
            assert_eq!(m["entries"].as_array().unwrap().len(), dim as usize);
        }
    }
    let (code, doc) = run(&["build", "--family", "odd-n", "--blocks", "2"]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["members"].as_array().unwrap().len(), 5);
    assert_eq!(doc["result"]["dim"], 5);
}

#[test]
fn build_complex_family_carries_imaginary_members() {
    let (code, doc) = run(&["build", "--family", "jordan-c2x8"]);
    assert_eq!(code, 0, "{doc}");
    let members = doc["result"]["members"].as_array().unwrap();
    assert_eq!(members.len(), 8);
    // Seventh member is the Jordan cell with diagonal 4i: entries are
    // [re, im] string pairs.
    let m = &members[6];
    assert_eq!(m["complex"], true);
    assert_eq!(m["entries"][0][0][0], "0");
    let im = f64_of(&m["entries"][0][0][1]);
    assert!((im - 4.0).abs() < 1e-12, "diagonal is {im}, wanted 4i");
    assert_eq!(m["entries"][0][1][0], "1e0");
    assert_eq!(m["entries"][1][0], Value::Array(vec!["0".into(), "0".into()]));
    assert_eq!(m["entries"][1][1], m["entries"][0][0]);
}

#[test]
fn solve_reports_error_below_eps() {
    let (code, doc) =
        run(&["solve", "--family", "jordan-r2x4", "--target", "0.3,-1.7", "--eps", "1e-2"]);
    assert_eq!(code, 0, "{doc}");
    let r = &doc["result"];
    assert!(f64_of(&r["achieved_error"]) < 1e-2);
    assert_eq!(r["exponents"].as_array().unwrap().len(), 4);
    let stages: Vec<&str> =
        r["stages"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(stages, ["sign", "frac", "int-shift"]);
}

#[test]
fn solve_rejects_zero_descriptor_blocks() {
    let (code, doc) =
        run(&["solve", "--family", "even-n", "--target", "0,0,1,1", "--eps", "0.5"]);
    assert_eq!(code, 3, "{doc}");
    assert_eq!(doc["error"]["code"], "not_in_hc_set");
}

#[test]
fn solve_rejects_nonpositive_eps() {
    let (code, doc) =
        run(&["solve", "--family", "jordan-r2x4", "--target", "0.3,-1.7", "--eps", "-1"]);
    assert_eq!(code, 4, "{doc}");
    assert_eq!(doc["error"]["code"], "bad_input");
}

#[test]
fn solve_exhausts_small_budgets() {
    let (code, doc) = run(&[
        "solve",
        "--family",
        "jordan-r2x4",
        "--target",
        "4.9,4.9",
        "--eps",
        "1e-6",
        "--max-exponent",
        "3",
    ]);
    assert_eq!(code, 2, "{doc}");
    assert_eq!(doc["error"]["code"], "budget_exhausted");
    assert!(doc["error"]["stage"].is_string());
}

#[test]
fn solve_ambient_metric_tracks_the_start_vector() {
    let (code, doc) = run(&[
        "solve",
        "--family",
        "rot-pair-r2",
        "--target",
        "0.4,1.1",
        "--eps",
        "1e-2",
        "--metric",
        "ambient",
        "--start",
        "1,0",
    ]);
    assert_eq!(code, 0, "{doc}");
    let r = &doc["result"];
    assert!(f64_of(&r["ambient_error"]) < 1e-2);
    assert_eq!(r["ambient_error"], r["achieved_error"]);
}

#[test]
fn certify_pins_the_progression_gap_constant() {
    let (code, doc) = run(&["certify", "--pair", "jordan-jordan", "-a", "2", "-b", "3"]);
    assert_eq!(code, 0, "{doc}");
    let r = &doc["result"];
    assert_eq!(r["kind"], "progression-gap");
    assert!(r["data"]["delta"].as_str().unwrap().starts_with("-3.182570841"));
    assert_eq!(r["check"]["passed"], true);
    assert_eq!(r["check"]["points_checked"], 10_000);
}

#[test]
fn certify_detects_a_unit_modulus() {
    let (code, doc) = run(&["certify", "--pair", "jordan-jordan", "-a", "1", "-b", "5"]);
    assert_eq!(code, 0, "{doc}");
    let r = &doc["result"];
    assert_eq!(r["kind"], "unit-modulus");
    assert_eq!(r["data"]["unit_is_a"], true);
    assert_eq!(r["check"]["passed"], true);
}

#[test]
fn coverage_runs_are_deterministic() {
    let args = &[
        "coverage",
        "--family",
        "jordan-r2x4",
        "--box",
        "-2:2,-2:2",
        "--grid",
        "10",
        "--cap",
        "12",
    ];
    let (c1, mut d1) = run(args);
    let (c2, mut d2) = run(args);
    assert_eq!((c1, c2), (0, 0));
    d1.as_object_mut().unwrap().remove("elapsed_ms");
    d2.as_object_mut().unwrap().remove("elapsed_ms");
    assert_eq!(d1, d2);
    assert_eq!(d1["result"]["points_enumerated"], 28_561); // 13^4
}

#[test]
fn coverage_takes_custom_member_lists() {
    let (code, doc) = run(&[
        "coverage",
        "--family",
        "custom",
        "--members",
        "2,3",
        "--box",
        "-2:2,-2:2",
        "--grid",
        "10",
        "--cap",
        "12",
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["family"], "custom");
    assert_eq!(doc["result"]["points_enumerated"], 169); // 13^2
}

#[test]
fn coverage_writes_the_histogram_csv() {
    let path = tmp("hist.csv");
    let path_s = path.to_str().unwrap();
    let (code, doc) = run(&[
        "coverage",
        "--family",
        "jordan-r2x4",
        "--box",
        "-2:2,-2:2",
        "--grid",
        "4",
        "--cap",
        "6",
        "--csv",
        path_s,
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["csv"], path_s);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i0,i1,count");
    assert_eq!(lines.len(), 1 + 16);
    std::fs::remove_file(&path).ok();
}

#[test]
fn unknown_flags_exit_with_bad_input() {
    let (code, doc) = run(&["solve", "--nonsense"]);
    assert_eq!(code, 4, "{doc}");
    assert_eq!(doc["error"]["code"], "bad_input");
}

#[test]
fn precision_env_feeds_the_context() {
    let args = &["build", "--family", "jordan-r2x4"];
    let (code, doc) = run_env(args, &[("HYPORBIT_PRECISION_BITS", "abc")]);
    assert_eq!(code, 4, "{doc}");
    let (code, doc) = run_env(args, &[("HYPORBIT_PRECISION_BITS", "32")]);
    assert_eq!(code, 4, "{doc}");
    let (code, doc) = run_env(args, &[("HYPORBIT_PRECISION_BITS", "256")]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["precision_bits"], 256);
    // The flag wins over the environment.
    let (code, doc) = run_env(
        &["build", "--family", "jordan-r2x4", "--precision-bits", "192"],
        &[("HYPORBIT_PRECISION_BITS", "256")],
    );
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["precision_bits"], 192);
}

#[test]
fn help_exits_zero() {
    let out = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("hyporbit"));
}

#[test]
fn custom_build_round_trips_members() {
    let (code, first) = run(&["build", "--family", "jordan-r2x4"]);
    assert_eq!(code, 0);
    let path = tmp("tuple.json");
    std::fs::write(&path, first.to_string()).unwrap();
    let (code, second) = run(&["build", "--custom", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{second}");
    assert_eq!(second["result"]["family"], "custom");
    assert_eq!(second["result"]["members"], first["result"]["members"]);
    assert_eq!(second["result"]["commute_check"]["ok"], true);
    std::fs::remove_file(&path).ok();
}
