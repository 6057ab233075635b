use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const GAUSSIAN_BETA4: &str = r#"{"version": "1", "potential": ["0", "1"], "beta": "4", "N": "2", "n_scalar": "24"}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_skewsop"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn check_passes_on_gaussian() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), GAUSSIAN_BETA4, &["check", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reports: serde_json::Value = serde_json::from_str(&read(tmp.path(), "o/check.json")).unwrap();
    let first = &reports.as_array().unwrap()[0];
    let mut keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["invariant_id", "pass", "residual", "tolerance"]);
}

#[test]
fn odd_degree_potential_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"version": "1", "potential": ["0", "0", "1"], "beta": "4", "N": "2", "n_scalar": "24"}"#;
    let out = run(tmp.path(), cfg, &["check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid potential"));
}

#[test]
fn config_diagnostics_name_the_field() {
    let tmp = TempDir::new().unwrap();
    for (args, field) in [
        (vec!["build", "--beta", "2"], "`beta`"),
        (vec!["build", "--N", "0"], "`N`"),
        (vec!["build", "--N", "20"], "`n_scalar`"),
        (vec!["build", "--precision", "40"], "`precision`"),
        (vec!["fold", "--x", "0.1,abc"], "`x[1]`"),
    ] {
        let out = run(tmp.path(), GAUSSIAN_BETA4, &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{args:?}");
    }
    let out = run(tmp.path(), r#"{"version": "0", "potential": ["0", "1"], "beta": "4", "N": "2", "n_scalar": "24"}"#, &["build"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), r#"{"version": "1", "potential": [0, 1], "beta": "4", "N": "2", "n_scalar": "24"}"#, &["build"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn density_csv_format() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), GAUSSIAN_BETA4, &["density", "--beta", "1", "--N", "1", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(tmp.path(), "o/density.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,rho"));
    assert!(lines.all(|l| l.split(',').count() == 2));
    assert!(tmp.path().join("o/density_oracle.csv").exists());
}

#[test]
fn outputs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        for cmd in ["build", "fold", "fund", "density"] {
            assert_eq!(run(tmp.path(), GAUSSIAN_BETA4, &[cmd, "--out", out]).status.code(), Some(0), "{cmd}");
        }
        let s = run(tmp.path(), GAUSSIAN_BETA4, &["sample", "--N", "1", "--seed", "9", "--out", out]);
        assert_eq!(s.status.code(), Some(0));
    }
    let mut names: Vec<_> = walk(&tmp.path().join("a"));
    names.sort();
    assert!(names.len() > 20);
    for name in names {
        let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

fn walk(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            let sub = p.file_name().unwrap().to_string_lossy().to_string();
            out.extend(walk(&p).into_iter().map(|n| format!("{sub}/{n}")));
        } else {
            out.push(p.file_name().unwrap().to_string_lossy().to_string());
        }
    }
    out
}

#[test]
fn tightened_tolerance_fails_with_exit_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"version": "1", "potential": ["0", "1"], "beta": "4", "N": "2", "n_scalar": "24",
                  "tolerances": {"beta4.sop.orthonormality": "1e-30"}}"#;
    let out = run(tmp.path(), cfg, &["build", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL beta4.sop.orthonormality"));
}

#[test]
fn fold_and_fund_emit_matrices() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"version": "1", "potential": ["0", "0", "0", "1"], "beta": "1", "N": "4", "n_scalar": "24",
                  "x": ["0.3"], "imag": "0.6"}"#;
    assert_eq!(run(tmp.path(), cfg, &["fold", "--out", "o"]).status.code(), Some(0));
    for m in ["F", "A", "D", "U"] {
        assert!(tmp.path().join(format!("o/fold/x0_shifted_{m}.csv")).exists());
    }
    assert_eq!(run(tmp.path(), cfg, &["fund", "--out", "o"]).status.code(), Some(0));
    assert!(read(tmp.path(), "o/fund/x0.csv").starts_with("row,column,re,im"));
}
