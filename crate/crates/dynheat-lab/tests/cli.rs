use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dynheat_lab::{report, run, Options, RunConfig};
use serde_json::Value;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn interval() -> String {
    fs::read_to_string(config_path("interval.toml")).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dynheat"))
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn shipped_configs_parse() {
    for name in ["interval.toml", "disk.toml"] {
        RunConfig::load(&config_path(name)).unwrap();
    }
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let text = interval().replace("cg_tol = 1e-12", "cg_tol = 1e-12\ncg_tolerance = 1e-3");
    let err = format!("{:#}", RunConfig::from_toml(&text).unwrap_err());
    assert!(err.contains("cg_tolerance"), "{err}");
}

#[test]
fn invalid_values_name_their_key() {
    let text = interval().replace("tau = 0.5", "tau = 1.5");
    let err = format!("{:#}", RunConfig::from_toml(&text).unwrap_err());
    assert!(err.contains("impulse.tau"), "{err}");
    let text = interval().replace("n = 32", "n = 2");
    assert!(RunConfig::from_toml(&text).is_ok());
    let cfg = RunConfig::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = format!("{:#}", run(dynheat_lab::Command::Simulate, &cfg, dir.path(), &Options::default()).unwrap_err());
    assert!(err.contains("grid.n"), "{err}");
    let text = interval().replace("kappa = \"auto\"", "kappa = \"sometimes\"");
    assert!(format!("{:#}", RunConfig::from_toml(&text).unwrap_err()).contains("control.kappa"));
}

#[test]
fn zero_initial_data_needs_no_control() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    fs::write(&cfg, interval().replace("kind = \"random\"", "kind = \"zero\"").replace("members = 5", "members = 1")).unwrap();
    let st = bin().args(["control", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(st.success());
    let v = json(&dir.path().join("control.json"));
    let m = &v["members"][0];
    assert!(m["h"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.0)));
    assert_eq!(m["norm_PsiT"].as_f64(), Some(0.0));
    assert_eq!(v["certified"], Value::Bool(true));
}

#[test]
fn degenerate_observe_ensemble_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.toml");
    fs::write(&cfg, interval().replace("kind = \"random\"", "kind = \"zero\"").replace("count = 20", "count = 1")).unwrap();
    let out = bin().args(["observe", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ensemble.count"));
    fs::write(&cfg, interval().replace("kind = \"random\"", "kind = \"zero\"")).unwrap();
    let st = bin().args(["observe", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(!st.success());
}

#[test]
fn commutator_residuals_decrease() {
    for name in ["interval.toml", "disk.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let st = bin().args(["commutator-check", "--config"]).arg(config_path(name)).arg("--out").arg(dir.path()).status().unwrap();
        assert!(st.success(), "{name}");
        let mut r = csv::Reader::from_path(dir.path().join("commutator.csv")).unwrap();
        let res: Vec<f64> = r.records().map(|x| x.unwrap()[5].parse().unwrap()).collect();
        assert_eq!(res.len(), 3);
        assert!(res.windows(2).all(|w| w[1] < w[0]), "{name}: {res:?}");
    }
}

#[test]
fn report_needs_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let err = report(dir.path()).unwrap_err().to_string();
    for f in ["observe.json", "constants.json", "control.json", "cost_study.json"] {
        assert!(err.contains(f), "{err}");
    }
    let st = bin().args(["report", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn partial_report_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml(&interval().replace("members = 5", "members = 2")).unwrap();
    run(dynheat_lab::Command::Control, &cfg, dir.path(), &Options::default()).unwrap();
    let first = report(dir.path()).unwrap();
    assert!(first.passed);
    let bytes = fs::read(dir.path().join("report.json")).unwrap();
    report(dir.path()).unwrap();
    assert_eq!(bytes, fs::read(dir.path().join("report.json")).unwrap());
    let v = json(&dir.path().join("report.json"));
    assert_eq!(v["observe"], Value::Null);
    assert_eq!(v["constants"], Value::Null);
    assert_eq!(v["certified"], Value::Bool(true));
    assert!(v["control"]["members"][0].get("h").is_none());
}

#[test]
fn failing_certificate_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, interval().replace("kappa = \"auto\"", "kappa = 1e-6").replace("members = 5", "members = 1")).unwrap();
    let st = bin().args(["control", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let v = json(&dir.path().join("control.json"));
    assert_eq!(v["members"][0]["flags"]["target"], Value::Bool(false));
    let st = bin().args(["report", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn seed_override_and_thread_count() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config_path("interval.toml");
    for (dir, threads, seed) in [(&a, "1", "7"), (&b, "3", "7"), (&c, "1", "8")] {
        let st = bin()
            .args(["--threads", threads, "simulate", "--seed", seed, "--dump-operator", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(a.path().join("operator_coo.csv").exists());
}

#[test]
fn floats_carry_seventeen_digits() {
    assert_eq!(dynheat_lab::format::float(0.1), "1.0000000000000001e-1");
    assert_eq!(dynheat_lab::format::float(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    let s = String::from_utf8(dynheat_lab::format::to_json(&serde_json::json!({"x": 0.1, "n": 3, "z": null})).unwrap()).unwrap();
    assert!(s.contains("1.0000000000000001e-1") && s.contains("\"n\": 3"));
}
