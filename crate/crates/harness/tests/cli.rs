use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbslab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

fn run_dirs(base: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(base)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn smoke_run_writes_one_passing_row() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("run")
        .arg(configs().join("smoke.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let dirs = run_dirs(out.path());
    assert_eq!(dirs.len(), 1);
    let csv = fs::read_to_string(dirs[0].join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], gibbslab::CSV_COLUMNS.join(","));
    assert!(lines[1].starts_with("local,"));
    assert!(lines[1].contains(",true,true,quadrature,"));
    for f in ["report.json", "run_meta.json", "series/local.csv"] {
        assert!(dirs[0].join(f).is_file(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical_and_never_overwrite() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("double_well_sweep.toml");
    for workers in ["1", "3"] {
        let s = bin()
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(out.path())
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert_eq!(s.code(), Some(0));
    }
    let dirs = run_dirs(out.path());
    assert_eq!(dirs.len(), 2);
    let a = fs::read(dirs[0].join("report.csv")).unwrap();
    let b = fs::read(dirs[1].join("report.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(dirs[0].join("report.json")).unwrap(),
        fs::read(dirs[1].join("report.json")).unwrap()
    );
}

#[test]
fn env_var_sets_default_output() {
    let out = tempfile::tempdir().unwrap();
    let s = bin()
        .arg("run")
        .arg(configs().join("smoke.toml"))
        .env("GIBBSLAB_OUT", out.path())
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    assert_eq!(run_dirs(out.path()).len(), 1);
}

#[test]
fn theorem_filter_and_seed_override() {
    let out = tempfile::tempdir().unwrap();
    let s = bin()
        .arg("run")
        .arg(configs().join("double_well_sweep.toml"))
        .arg("--out")
        .arg(out.path())
        .args([
            "--theorem",
            "complement",
            "--theorem",
            "minima_distribution",
            "--seed",
            "5",
        ])
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    let dir = &run_dirs(out.path())[0];
    let csv = fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.starts_with("complement,") || l.starts_with("minima_distribution,")));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["master_seed"], 5);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "name = \"x\"\nmaster_seed = 1\nbogus = 2\n");
    let out = bin().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let s = bin()
        .arg("run")
        .arg(&p)
        .arg("--out")
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(2));
}

#[test]
fn validate_prints_canonical_json() {
    let out = bin()
        .arg("validate")
        .arg(configs().join("smoke.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["sampler"]["kind"], "metropolis");
    assert_eq!(v["landscape"]["kind"], "quadratic");
}

#[test]
fn failing_assertion_exits_with_one() {
    // a sub-Gaussian constant far too small for the data makes the bound false
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        r#"
name = "tiny-sigma"
master_seed = 4
theorems = ["generalization"]
[landscape]
kind = "rls"
w0 = [0.4]
noise = 0.3
[sweep]
gamma = [10.0]
lambda = [0.1]
m = [10]
radius = { kind = "fraction_of_r0", values = [0.5] }
variants = ["theorem"]
sigma = 1e-4
[sampler]
kind = "exact_gaussian"
steps = 500
trials = 200
"#,
    );
    let out = bin()
        .arg("run")
        .arg(&p)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn numerical_errors_exit_with_three() {
    // the exact Gaussian sampler cannot target a double-well
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        r#"
name = "bad-kind"
master_seed = 4
theorems = ["generalization"]
[landscape]
kind = "double_well"
dim = 1
half_width = 2.0
[sweep]
gamma = [10.0]
m = [100]
radius = { kind = "fraction_of_r0", values = [0.5] }
[sampler]
kind = "exact_gaussian"
steps = 500
trials = 50
"#,
    );
    let s = bin()
        .arg("run")
        .arg(&p)
        .arg("--out")
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(3));
}

#[test]
fn lists_landscapes() {
    let out = bin().arg("list-landscapes").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "quadratic",
        "double_well",
        "spline",
        "rls",
        "square_location",
    ] {
        assert!(text.contains(name));
    }
}

#[test]
fn unvisited_wells_are_reported_but_not_asserted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
name = "sparse"
master_seed = 7
theorems = ["local", "pseudo"]

[landscape]
kind = "double_well"
dim = 4
half_width = 2.0

[sweep]
gamma = [20.0]
m = [1000]
radius = { kind = "fraction_of_r0", values = [0.3] }

[sampler]
steps = 5000
chains = 2
"#,
    );
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("runs"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("not asserted"));
    let run = &run_dirs(&dir.path().join("runs"))[0];
    let csv = fs::read_to_string(run.join("report.csv")).unwrap();
    let nan_rows: Vec<&str> = csv.lines().filter(|l| l.contains(",nan,")).collect();
    assert!(!nan_rows.is_empty());
    assert!(
        nan_rows.iter().all(|l| l.contains(",false,true,")),
        "{nan_rows:?}"
    );
}
