//! End-to-end checks of the binary: verdict lines, exit codes, and JSON
//! output round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/emp-fail.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khlogic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn check_true_with_witness_exits_zero() {
    let fx = fixture();
    let out = run(&["check", "-m", fx.to_str().unwrap(), "-w", "w", "-f", "Kh[1](p,q)"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("true"), "{text}");
    assert!(text.contains("{[a]}"), "{text}");
}

#[test]
fn check_false_exits_one() {
    let fx = fixture();
    let out = run(&["check", "-m", fx.to_str().unwrap(), "-w", "w", "-f", "Kh[1](p,r)"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_formula_exits_two() {
    let fx = fixture();
    let out = run(&["check", "-m", fx.to_str().unwrap(), "-w", "w", "-f", "p | | q"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["check", "-m", "/nonexistent.json", "-w", "w", "-f", "p"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sat_verdicts_and_exit_codes() {
    let out = run(&["sat", "-f", "p & ~p"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("UNSAT"));

    let out = run(&["--json", "sat", "-f", "A(p->q) & ~Kh[1](p,q)"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["verdict"], "sat");
    // the emitted model is a loadable ULTS
    let model_text = serde_json::to_string(&v["model"]).unwrap();
    assert!(khlogic::model_from_json(&model_text).is_ok());
}

#[test]
fn valid_subcommand() {
    let out = run(&["valid", "-f", "Kh[1](false, q)"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["valid", "-f", "A(p->q) -> Kh[1](p,q)"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn equiv_and_bisim_on_fixture() {
    let fx = fixture();
    let fxs = fx.to_str().unwrap();
    let out = run(&["bisim", "-m", fxs, "-w", "w", "-n", fxs, "-x", "w"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("bisimilar"));

    let out = run(&["equiv", "-m", fxs, "-w", "w", "-n", fxs, "-x", "u"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("distinguishing formula"));
}

#[test]
fn filter_emits_loadable_model_with_class_map() {
    let fx = fixture();
    let out = run(&["--json", "filter", "-m", fx.to_str().unwrap(), "-f", "Kh[1](p,q)"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["class_map"]["v_r"], v["class_map"]["x"]);
    let text = serde_json::to_string(&v).unwrap();
    assert!(khlogic::model_from_json(&text).is_ok());
}

#[test]
fn translate_and_classify() {
    let fx = fixture();
    let dir = std::env::temp_dir().join("khlogic-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let ac = dir.join("ac.json");
    let out = run(&[
        "translate",
        "-m",
        fx.to_str().unwrap(),
        "--to",
        "ults-ac",
        "-o",
        ac.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["--json", "classify", "-m", ac.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["is_active"], true);
    assert_eq!(v["is_se_compositional"], true);

    // the fixture itself is rejected by the reverse translation
    let out = run(&["translate", "-m", fx.to_str().unwrap(), "--to", "lts"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn axioms_harness_with_seed() {
    let out = Command::new(env!("CARGO_BIN_EXE_khlogic"))
        .args(["axioms", "--trials", "30", "--schemas", "KhE,EMP", "--max-states", "4"])
        .env("KHOW_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("seed 42"));
    assert!(text.contains("KhE"));
    // EMP gets the fixture counterexample as its first trial
    assert!(text.contains("EMP") && text.contains("counterexample"));
}
