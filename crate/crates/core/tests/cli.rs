use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reservoir-dfs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn reservoir-dfs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn fig1_short_run() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["fig1", "--set", "periods=2", "--out", "f.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["t_over_period", "fidelity"]);
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0], [0.0, 1.0]);
    assert!((rows[20][0] - 2.0).abs() < 1e-12);
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first.split(',').next().unwrap().len(), "0.0000000000000000e0".len());
}

#[test]
fn fig1_without_decay_stays_at_one() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"gamma_a": 0, "gamma_b": 0, "periods": 1}"#).unwrap();
    let o = run(dir.path(), &["fig1", "--config", "c.json", "--out", "f.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = parse_csv(&fs::read_to_string(dir.path().join("f.csv")).unwrap());
    assert!(rows.iter().all(|r| (r[1] - 1.0).abs() < 1e-8));
}

#[test]
fn fig2_header_and_rows() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["fig2", "--set", "r_points=5", "--set", "panels=512"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = parse_csv(&fs::read_to_string(dir.path().join("fig2.csv")).unwrap());
    assert_eq!(
        header,
        ["r", "beta_global_raw", "beta_global_wrapped", "beta_sub_closed", "beta_sub_quadrature"]
    );
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[4][0], 1.0);
}

#[test]
fn table1_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["table1", "--out", "a.json"])), 0);
    assert_eq!(code(&run(dir.path(), &["table1", "--out", "b.json"])), 0);
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn invert_reports_branch() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["invert", "--set", "amplitudes=[[0.8,0],[0,0],[0,0],[0.3,0.5196152422706632]]", "--out", "i.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("i.json")).unwrap()).unwrap();
    assert_eq!(v["branch"], "superposition_closed_form");
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["input", "normalized", "warnings", "branch", "params", "coords", "residual"]);
}

#[test]
fn unreachable_state_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["invert", "--set", "amplitudes=[[0.035,0.466],[-0.347,0.37],[-0.097,-0.098],[0.708,0.059]]"],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(!dir.path().join("invert.json").exists());
}

#[test]
fn bad_input_exits_two() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["fig1", "--set", "bogus=1"][..],
        &["fig1", "--set", "omega1"][..],
        &["fig1", "--set", "kappa=-3"][..],
        &["fig2", "--set", "omega1=105"][..],
        &["invert"][..],
        &["invert", "--set", "amplitudes=[[1,0]]"][..],
        &["fig1", "--config", "missing.json"][..],
        &["nonsense"][..],
    ] {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn set_overrides_config_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"periods": 5, "stride": 1}"#).unwrap();
    let o = run(dir.path(), &["fig1", "--config", "c.json", "--set", "periods=1", "--out", "f.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = parse_csv(&fs::read_to_string(dir.path().join("f.csv")).unwrap());
    assert_eq!(rows.len(), 2);
}
