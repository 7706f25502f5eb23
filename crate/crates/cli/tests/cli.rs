use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphereframes"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn zonal_spectrum_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--preset", "abel-poisson-zonal", "--band-limit", "16"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&dir.path().join("beta.csv"));
    assert_eq!(rows.len(), 17);
    for row in &rows[1..] {
        let beta: f64 = row[1].parse().unwrap();
        assert!((beta - 0.25).abs() < 1e-12, "{row:?}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("beta.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["profile.preset"], "abel-poisson-zonal");
}

#[test]
fn first_order_spectrum_has_a_zero_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--preset", "abel-poisson"], dir.path());
    assert!(o.status.success());
    let rows = data_rows(&dir.path().join("beta.csv"));
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    assert!(rows[1][1].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn nonpositive_q_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "[profile]\na = 1\nb = 1\nc = 1\nd = 0\nq = -1, 1\n").unwrap();
    let o = run(&["spectrum", "--config", conf.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q(1)"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn quickstart_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let conf = config("quickstart.conf");
    let o = run(&["certify", "--config", conf.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("verdict: pass"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["certify"]["report"]["verdict"], "pass");
    assert_eq!(report["config"]["certify.seed"], "2024");
    assert_eq!(data_rows(&dir.path().join("trials.csv")).len(), 20);
}

#[test]
fn coarse_grid_fails_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = config("quickstart.conf");
    let o = run(&["certify", "--config", conf.to_str().unwrap(), "--delta", "pi,2pi"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["certify"]["report"]["verdict"], "fail");
    assert_eq!(report["certify"]["report"]["rotation_count"], 1);
}

#[test]
fn missing_config_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--config", "/nonexistent/run.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/nonexistent/run.conf"));
    assert!(err.contains("Usage: sphereframes"));
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--preset", "poisson-2", "--band-limit", "5", "--delta", "0.8,1.6", "--trials", "3", "--seed", "11"];
    for cmd in ["spectrum", "scale-grid", "rot-grid", "transform", "certify"] {
        let mut texts = Vec::new();
        for (k, threads) in ["1", "2"].iter().enumerate() {
            let out = dir.path().join(format!("{cmd}-{k}"));
            let mut args = vec![cmd, "--threads", threads];
            args.extend(base);
            let o = run(&args, &out);
            assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{cmd}: {o:?}");
            let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            assert!(!files.is_empty());
            texts.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
        }
        assert_eq!(texts[0], texts[1], "{cmd}");
        for file in &texts[0] {
            assert!(String::from_utf8_lossy(file).contains("certify.seed"), "{cmd} lacks provenance");
        }
    }
}

#[test]
fn fast_and_naive_transforms_agree() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["transform", "--band-limit", "4", "--delta", "1.0,1.5", "--scales", "3"];
    assert!(run(&args, &dir.path().join("fast")).status.success());
    let mut naive = args.to_vec();
    naive.push("--naive");
    assert!(run(&naive, &dir.path().join("naive")).status.success());
    let a = data_rows(&dir.path().join("fast/transform.csv"));
    let b = data_rows(&dir.path().join("naive/transform.csv"));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        for k in 2..4 {
            let (u, v): (f64, f64) = (x[k].parse().unwrap(), y[k].parse().unwrap());
            assert!((u - v).abs() < 1e-12, "{x:?} vs {y:?}");
        }
    }
}

#[test]
fn wrong_number_of_caps_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["rot-grid", "--delta", "0.5,0.5,0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["rot-grid", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
