use std::path::Path;
use std::process::{Command, Output};

fn harmcrit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmcrit")).args(args).current_dir(cwd).output().expect("spawn harmcrit")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn freq_sweep_on_2xy_is_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harmcrit(&["run", "freq-sweep", "--out", "f"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("SUMMARY: PASS"));
    let csv = std::fs::read_to_string(tmp.path().join("f/frequency.csv")).unwrap();
    let n = column(&csv, "N_C");
    assert!(!n.is_empty());
    for v in n {
        assert!((v - 2.0).abs() < 1e-6, "N_C = {v}");
    }
}

#[test]
fn simon_run_with_epsilon() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harmcrit(&["run", "simon", "--epsilon", "0.3", "--out", "s"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("s/critical.csv")).unwrap();
    assert!(csv.starts_with("x,y,z,grad_norm,u_value,class\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn epsilon_requires_simon_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harmcrit(&["run", "freq-sweep", "--epsilon", "0.3"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "experiment = \"freq-sweep\"\nbogus = 1\n").unwrap();
    let out = harmcrit(&["run", "bad.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("line 2"), "{err}");
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(harmcrit(&["run", "no-such-thing"], tmp.path()).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("blocker"), "").unwrap();
    let out = harmcrit(&["run", "freq-sweep", "--out", "blocker/sub"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_lists_experiments_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harmcrit(&["schema"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8_lossy(&out.stdout);
    for key in ["freq-sweep", "conformal-count", "frequency.csv", "critical.csv"] {
        assert!(s.contains(key), "missing {key}");
    }
}

#[test]
fn schema_example_is_a_valid_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harmcrit(&["schema"], tmp.path());
    std::fs::write(tmp.path().join("schema.toml"), &out.stdout).unwrap();
    let run = harmcrit(&["run", "schema.toml", "--out", "o"], tmp.path());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn verify_all_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = harmcrit(&["verify-all", "--only", "1,5", "--seed", "7", "--out", dir], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    for f in ["summary.csv", "ac01.csv", "ac05.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn empty_fixture_list_is_noop() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harmcrit(&["verify-all", "--only", "3", "--fixtures", "", "--out", "v"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("AC3  NOOP"));
}
