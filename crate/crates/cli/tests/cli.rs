use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn betalab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betalab")).args(args).env("BETALAB_CACHE_DIR", out).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn classify_golden_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = betalab(dir.path(), &["classify", "--beta", "(1+sqrt5)/2", "--depth", "16"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["verdict"], "Simple");
    assert_eq!(v["hit_zero_at"], 2);
    assert!(dir.path().join("classify/manifest.json").exists());
}

#[test]
fn exponent_at_one_one() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&betalab(dir.path(), &["exponent", "--alpha", "1", "--beta", "1"]));
    assert!((v["value"].as_f64().unwrap() + 0.2).abs() < 1e-15);
    assert!(v["grid_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn weyl_period_two_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let o = betalab(dir.path(), &["weyl", "--beta", "2", "--x", "1/3", "--m", "1", "--N", "10000"]);
    assert!(o.status.success());
    let row = &json(&o)["values"][0];
    let re = row["re"].as_f64().unwrap();
    let im = row["im"].as_f64().unwrap();
    assert!(((re + 0.5).powi(2) + im.powi(2)).sqrt() <= 2e-4);
    let csv = std::fs::read_to_string(dir.path().join("weyl/weyl.csv")).unwrap();
    assert!(csv.starts_with("m,n,abs,re,im,radius"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(betalab(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(betalab(dir.path(), &["classify", "--beta", "2", "--nope"]).status.code(), Some(1));
    assert_eq!(betalab(dir.path(), &["exponent", "--alpha", "2", "--beta", "1"]).status.code(), Some(1));
    assert_eq!(betalab(dir.path(), &["classify", "--beta", "1/2"]).status.code(), Some(1));
    assert_eq!(betalab(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn precision_exhaustion_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = betalab(dir.path(), &["orbit", "--beta", "1.7@64", "--x", "1/3", "--n", "500"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precision"));
    let ok = betalab(dir.path(), &["orbit", "--beta", "1.7@64", "--x", "1/3", "--n", "20", "--digits", "5"]);
    assert!(ok.status.success());
}

#[test]
fn conditions_reports_both_memory_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let src = r#"{"alphabet":2,"order":1,"transition":[["9/10","1/10"],["1/5","4/5"]]}"#;
    let o = betalab(dir.path(), &["conditions", "--source", src, "--m-max", "6"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["levels"][1]["ess_sup"], "81/100");
    assert_eq!(v["stated_bound_holds"], false);
    let alpha = v["alpha_hat"].as_f64().unwrap();
    assert!((alpha - (-0.9f64.log2())).abs() < 0.05);
}

#[test]
fn iid_source_shorthand() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&betalab(dir.path(), &["conditions", "--source", "iid:0.7,0.3", "--m-max", "4"]));
    assert_eq!(v["levels"][3]["ess_sup"], "2401/10000");
}

#[test]
fn lemma32_uniform_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = betalab(dir.path(), &["lemma32", "--measure", "uniform", "--m", "64", "--r", "0.1"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["holds"], true);
    let missing = betalab(dir.path(), &["lemma32", "--measure", "parry", "--m", "4", "--r", "0.1"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn invariance_defect_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = betalab(dir.path(), &["invariance", "--beta", "5/2", "--x", "1/7", "--N", "4000", "--degree", "16"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["defect"]["within_bound"], true);
    assert!(v["parry_distance"].as_f64().unwrap() >= 0.0);
}

#[test]
fn single_threaded_reruns_are_byte_identical() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args =
        ["decay", "--beta", "(1+sqrt5)/2", "--N", "1000", "--samples", "16", "--m", "1-3,200-202", "--seed", "9"];
    let a = betalab(d1.path(), &args);
    let b = betalab(d2.path(), &args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    for file in ["decay/result.json", "decay/decay.csv", "decay/manifest.json"] {
        assert_eq!(std::fs::read(d1.path().join(file)).unwrap(), std::fs::read(d2.path().join(file)).unwrap());
    }
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(d1.path().join("decay/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"][0], 9);
    assert!(manifest["proxy"].as_str().unwrap().contains("N/4"));
}

#[test]
fn worker_count_does_not_change_results() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["decay", "--beta", "5/2", "--N", "800", "--samples", "16", "--m", "1-4"];
    let a = betalab(d1.path(), &args);
    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "4"]);
    let b = betalab(d2.path(), &with_workers);
    assert_eq!(json(&a)["d"], json(&b)["d"]);
}
