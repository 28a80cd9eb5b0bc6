use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn skorohod(args: &[&str]) -> Output {
    let args: Vec<String> = args
        .iter()
        .map(|a| {
            if a.ends_with(".json") && !Path::new(a).is_absolute() {
                fixture(a).display().to_string()
            } else {
                a.to_string()
            }
        })
        .collect();
    Command::new(env!("CARGO_BIN_EXE_skorohod"))
        .args(&args)
        .output()
        .expect("binary runs")
}

fn certificate(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("certificate is JSON")
}

#[test]
fn order_holds_with_exact_plan() {
    let out = skorohod(&["order", "v-mu.json", "v-nu.json"]);
    assert_eq!(out.status.code(), Some(0));
    let c = certificate(&out);
    assert_eq!(c["decision"], "holds");
    assert_eq!(c["witnesses"]["plan"]["t"]["⊥|a"], "1/4");
    assert_eq!(c["witnesses"]["plan"]["t"]["⊥|b"], "1/4");
    assert_eq!(c["witnesses"]["plan"]["w"], "1/2");
    assert!(c["transcript"].as_array().unwrap().iter().all(|t| t["passed"] == true));
}

#[test]
fn order_fails_with_separating_upper_set() {
    let out = skorohod(&["order", "diamond-top.json", "diamond-a.json"]);
    assert_eq!(out.status.code(), Some(1));
    let c = certificate(&out);
    assert_eq!(c["decision"], "fails");
    assert_eq!(c["witnesses"]["refusal"]["upper_set"], serde_json::json!(["⊤"]));
}

#[test]
fn split_refuses_incomparable_pair() {
    let out = skorohod(&["split", "diamond-top.json", "diamond-a.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(certificate(&out)["decision"], "refused");
}

#[test]
fn waybelow_mass_rules_disagree_on_skewed_pair() {
    let total = certificate(&skorohod(&["waybelow", "v-mu.json", "v-nu-skewed.json"]));
    let per_element = skorohod(&[
        "waybelow",
        "v-mu.json",
        "v-nu-skewed.json",
        "--mass-rule",
        "strict_per_element",
    ]);
    assert_eq!(total["decision"], "holds");
    assert_eq!(per_element.status.code(), Some(1));
    assert_eq!(certificate(&per_element)["decision"], "fails");
}

#[test]
fn realize_and_refuse_non_chain() {
    let ok = skorohod(&["realize", "v-chain.json"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(certificate(&ok)["witnesses"]["realization"]["levels"], serde_json::json!([1, 2]));
    let bad = skorohod(&["realize", "v-not-chain.json"]);
    assert_eq!(bad.status.code(), Some(1));
    let c = certificate(&bad);
    assert_eq!(c["decision"], "refused");
    assert_eq!(c["witnesses"]["not_a_chain"]["upper_set"], serde_json::json!(["a"]));
}

#[test]
fn extend_lists_bottom_off_domain() {
    let c = certificate(&skorohod(&["extend", "v-map.json"]));
    assert_eq!(c["witnesses"]["values"]["00"], "a");
    assert_eq!(c["witnesses"]["values"]["01"], "b");
    assert_eq!(c["witnesses"]["values"]["0"], "⊥");
    assert_eq!(c["witnesses"]["values"]["11"], "⊥");
}

#[test]
fn quantile_round_trip_flags_sub_probability() {
    let out = skorohod(&["quantile", "chain-half.json", "--check-roundtrip"]);
    assert_eq!(out.status.code(), Some(0));
    let c = certificate(&out);
    assert_eq!(c["decision"], "pass-with-deviation");
    assert_eq!(c["witnesses"]["flags"], serde_json::json!(["mass 1/2 assigned to ⊤"]));
    assert_eq!(c["witnesses"]["pushforward"]["1"], "1/2");

    let full = certificate(&skorohod(&["quantile", "chain-two-point.json", "--check-roundtrip"]));
    assert_eq!(full["decision"], "pass");
}

#[test]
fn quantile_compare_reports_consistent_orders() {
    let c = certificate(&skorohod(&["quantile", "chain-low.json", "--compare", "chain-high.json"]));
    assert_eq!(c["witnesses"]["order_iso"]["status"], "consistent");
    assert_eq!(c["witnesses"]["order_iso"]["valuation_holds"], true);
}

#[test]
fn demo_reproduces_flat_fixture() {
    let out = skorohod(&["skorohod-demo", "example-flat.json", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let c = certificate(&out);
    assert_eq!(c["witnesses"]["limit_at_all_ones"], "⊥");
    assert_eq!(c["witnesses"]["limit_elsewhere"], serde_json::json!(["0"]));
    let tails = c["witnesses"]["tails"].as_array().unwrap();
    assert_eq!(tails.len(), 10);
    assert_eq!(tails[9]["exception_mass"], "1/1024");
}

#[test]
fn portmanteau_tolerance_controls_decision() {
    let strict = skorohod(&["portmanteau", "example-flat.json", "--horizon", "10"]);
    assert_eq!(strict.status.code(), Some(1));
    let loose = skorohod(&[
        "portmanteau",
        "example-flat.json",
        "--horizon",
        "10",
        "--tolerance",
        "1/1024",
    ]);
    assert_eq!(loose.status.code(), Some(0));
}

#[test]
fn malformed_inputs_exit_with_two() {
    for args in [
        &["order", "bad-non-dyadic.json", "v-nu.json"][..],
        &["order", "bad-mass.json", "v-nu.json"],
        &["order", "missing.json", "v-nu.json"],
        &["realize", "v-mu.json"],
    ] {
        let out = skorohod(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let out = skorohod(&["order", "bad-mass.json", "v-nu.json"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("total mass"));
}

#[test]
fn output_flag_writes_identical_certificate_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let path = path.to_str().unwrap();
    let stdout = skorohod(&["converge", "example-flat.json"]).stdout;
    let written = skorohod(&["converge", "example-flat.json", "--output", path]);
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read(path).unwrap(), stdout);
    let report = skorohod(&["verify", path]);
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(certificate(&report)["verified"], true);
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = certificate(&skorohod(&["order", "v-mu.json", "v-nu.json"]));
    c["witnesses"]["plan"]["t"]["⊥|a"] = Value::from("1/2");
    let path = dir.path().join("plan.json");
    std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
    let report = skorohod(&["verify", path.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(1));
    assert_eq!(certificate(&report)["verified"], false);

    let mut c = certificate(&skorohod(&["order", "v-mu.json", "v-nu.json"]));
    c["inputs"]["mu"]["⊥"] = Value::from("1/4");
    let path = dir.path().join("inputs.json");
    std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(skorohod(&["verify", path.to_str().unwrap()]).status.code(), Some(1));
}
