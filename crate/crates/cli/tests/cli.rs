use std::fs;
use std::process::{Command, Output};

const CP_EXP: &str = r#"{"drift":-1,"jump_rate":0.5,"jump_law":{"kind":"exponential","rate":1}}"#;
const GE22: &str = r#"{"drift":-1,"jump_rate":0.5,"jump_law":{"kind":"gamma_exp","alpha":2,"beta":2}}"#;

fn expfun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expfun"))
        .args(args)
        .env_remove("EXPFUN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_shows_five_builtins() {
    let o = expfun(&["list"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn show_output_is_a_runnable_scenario() {
    let o = expfun(&["show", "cp-salpha2"]);
    assert!(o.status.success());
    let s = expfun::scenario::Scenario::from_json(&stdout(&o)).unwrap();
    assert_eq!(s.name, "cp-salpha2");
}

#[test]
fn validate_exit_code_follows_certificate() {
    let ok = expfun(&["validate", "--model", GE22, "--regime", "s-alpha", "--alpha", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = expfun(&["validate", "--model", GE22, "--regime", "cramer"]);
    assert_eq!(bad.status.code(), Some(1));
    let usage = expfun(&["validate", "--model", GE22, "--regime", "s-alpha"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_stamped() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, w) in [(&a, "1"), (&b, "3")] {
        let o = expfun(&[
            "simulate", "--model", CP_EXP, "--seed", "9", "--samples", "500", "--remainder-cap", "1e12",
            "--workers", w, "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# expfun "));
    assert_eq!(lines.next().unwrap(), "sample_index,value,remainder_bound,segments_used");
    assert_eq!(lines.count(), 500);
}

#[test]
fn moments_of_brownian_model() {
    let o = expfun(&["moments", "--model", r#"{"drift":-3,"gaussian_var":2}"#, "--gamma", "1,2", "--seed", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["value"].as_f64().unwrap(), 0.5);
    assert!((v[1]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn cramer_root_of_exponential_jumps() {
    let o = expfun(&["cramer", "--model", CP_EXP]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["theta"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn ladder_verify_passes() {
    let o = expfun(&["ladder", "verify", "--model", CP_EXP, "--paths", "200", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn missing_seed_is_rejected_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&expfun(&["show", "cp-cramer-exp"]))).unwrap();
    v.as_object_mut().unwrap().remove("seed");
    let p = dir.path().join("s.json");
    fs::write(&p, v.to_string()).unwrap();
    let o = expfun(&["report", p.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn report_writes_bundle_under_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_expfun"))
        .args(["report", "cp-cramer-exp", "--scale", "0.05"])
        .env("EXPFUN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    let out = dir.path().join("cp-cramer-exp");
    for f in ["samples.csv", "excursion_tail.csv", "tail_excursion.csv", "tail_functional.csv", "certificate.json", "summary.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let passed = summary["passed"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if passed { 0 } else { 1 }));
    assert_eq!(summary["hash"].as_str().unwrap().len(), 64);
}
