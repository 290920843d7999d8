//! End-to-end runs of the `heatlab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn heatlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HEATLAB_OUT")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("spawn heatlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// The single run directory created under `out`.
fn run_dir(out: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn kernel_writes_table_plot_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = heatlab(tmp.path(), &["kernel", "--interval", "0.5", "--y", "0.2", "--t", "0.02", "--plot"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(tmp.path());
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("kernel-"));

    let (header, rows) = csv_rows(dir.join("kernel.csv"));
    assert_eq!(header, ["x", "y", "t", "kernel", "bound", "slack"]);
    assert_eq!(rows.len(), 201);
    for r in &rows {
        let k: f64 = r[3].parse().unwrap();
        let b: f64 = r[4].parse().unwrap();
        assert!(k - b >= -1e-12, "{r:?}");
    }

    let svg = fs::read_to_string(dir.join("kernel.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);

    let report = json(dir.join("kernel.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "kernel");

    let manifest = json(dir.join("manifest.json"));
    assert_eq!(manifest["timestamp"], "2023-11-14T22:13:20Z");
    let listed: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["config.txt", "kernel.csv", "kernel.json", "kernel.svg"] {
        assert!(listed.contains(&f), "{f} missing from {listed:?}");
    }
    let hash = manifest["config_hash"].as_str().unwrap();
    assert!(dir.ends_with(format!("kernel-{}", &hash[..12])));
}

#[test]
fn box_sweep_has_no_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let o = heatlab(tmp.path(), &["bounds-sweep", "--kind", "short-time-nd", "--box", "1,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(run_dir(tmp.path()).join("sweep.json"));
    assert_eq!(report["result"]["violations"].as_array().unwrap().len(), 0);
    assert!(report["result"]["nodes"].as_u64().unwrap() > 0);
}

#[test]
fn sweep_past_validity_is_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let o = heatlab(tmp.path(), &["bounds-sweep", "--t-lo", "1e3", "--t-hi", "1e4", "--n-times", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(run_dir(tmp.path()).join("sweep.csv"));
    assert_eq!(header.len(), 6);
    assert!(rows.is_empty());
}

#[test]
fn blowup_slope_is_near_the_scaling_prediction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = heatlab(tmp.path(), &["blowup"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(run_dir(tmp.path()).join("blowup.json"));
    let fitted = report["result"]["fitted_slope"].as_f64().unwrap();
    let expected = report["result"]["theoretical_slope"].as_f64().unwrap();
    assert!((expected - (6.0 - 3.0 / 0.9)).abs() < 1e-12);
    assert!((fitted - expected).abs() <= 0.25 * expected, "slope {fitted} vs {expected}");
}

#[test]
fn osgood_table_has_fifty_terms() {
    let tmp = tempfile::tempdir().unwrap();
    let o = heatlab(tmp.path(), &["osgood"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(run_dir(tmp.path()).join("osgood.csv"));
    assert_eq!(header.last().unwrap(), "partial_sum");
    assert_eq!(rows.len(), 50);
    let total: f64 = rows.last().unwrap().last().unwrap().parse().unwrap();
    assert!((24.0..=25.0).contains(&total), "{total}");
}

#[test]
fn invalid_configuration_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = heatlab(tmp.path(), &["bounds-sweep", "--kind", "sideways"]);
    assert_eq!(code(&o), 2);
    let o = heatlab(tmp.path(), &["kernel", "--domain", "box:1,1"]);
    assert_eq!(code(&o), 2);
    let o = heatlab(tmp.path(), &["blowup", "--cells", "10"]);
    assert_eq!(code(&o), 2);

    let file = tmp.path().join("bad.conf");
    fs::write(&file, "no-such-key = 1\n").unwrap();
    let o = heatlab(tmp.path(), &["kernel", "--config", file.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("run.conf");
    fs::write(&file, "# kernel run\nt = 0.05\npoints = 11\n").unwrap();
    let out = tmp.path().join("out");
    let o = heatlab(&out, &["kernel", "--config", file.to_str().unwrap(), "--points", "21"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv_rows(run_dir(&out).join("kernel.csv"));
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() == 0.05));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_heatlab"))
        .args(["kernel", "--points", "5"])
        .env("HEATLAB_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run_dir(tmp.path()).join("kernel.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["bounds-sweep", "--kind", "all-time-1d", "--points-per-axis", "5", "--n-times", "6"];
    assert_eq!(code(&heatlab(a.path(), &args)), 0);
    assert_eq!(code(&heatlab(b.path(), &args)), 0);
    let (da, db) = (run_dir(a.path()), run_dir(b.path()));
    assert_eq!(da.file_name(), db.file_name());
    for f in ["config.txt", "sweep.csv", "sweep.json", "manifest.json"] {
        let (x, y) = (fs::read(da.join(f)).unwrap(), fs::read(db.join(f)).unwrap());
        assert!(x == y, "{f} differs");
    }
}
