use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_hmw");

fn scenario_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"))
}

fn hmw(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_dir().join("current_sweep.toml");
    let csv = dir.path().join("out.csv");
    let out = hmw(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 122);
    assert!(text.starts_with("scan_var,visibility,phase_rad,F1m-1"));

    let json = dir.path().join("out.json");
    let out = hmw(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        json.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 121);
    assert!(v["magnitudes"]["zeeman_f2m2"].is_number());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\n[beam]\nv_m = -5.0\ns_parallel = 8.0\n[scan]\nvariable = \"velocity\"\nstart = 1.0\nstop = 2.0\nsteps = 2\n").unwrap();
    let out = hmw(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beam.v_m"));

    let missing = hmw(&[
        "run",
        "--config",
        dir.path().join("nope.toml").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    // 2 T drives X far beyond 1 on the default geometry.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strong.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\n[beam]\nv_m = 1065.0\ns_parallel = 8.0\n[magnetic]\nenabled = true\nmodulus = 2.0\n\
         [scan]\nvariable = \"coil_current\"\nstart = 1.0\nstop = 1.0\nsteps = 1\n",
    )
    .unwrap();
    let out = hmw(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn fit_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = String::from("i,i_c,j1\n");
    for k in 0..20 {
        let i = -1.0 + 2.0 * k as f64 / 19.0;
        let ic = -1.0 + 2.0 * ((7 * k) % 20) as f64 / 19.0;
        let j1 = 0.5 * (i - 0.2f64).abs() + 0.1 * (ic + 0.3f64).abs() + 0.05;
        data.push_str(&format!("{i:?},{ic:?},{j1:?}\n"));
    }
    std::fs::write(dir.path().join("data.csv"), data).unwrap();
    let cfg = dir.path().join("fit.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nmode = \"j1\"\ndata = \"data.csv\"\n",
    )
    .unwrap();
    let out = hmw(&["fit", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["model"]["a_j1"].as_f64().unwrap() - 0.5).abs() < 5e-3);
    assert!((v["model"]["i0c"].as_f64().unwrap() + 0.3).abs() < 3e-3);
}

#[test]
fn one_sided_fit_data_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = String::from("i,i_c,j1\n");
    for k in 0..8 {
        let i = 1.0 + 0.1 * k as f64;
        let ic = 0.5 + 0.05 * ((3 * k) % 8) as f64;
        data.push_str(&format!(
            "{i:?},{ic:?},{:?}\n",
            0.5 * (i - 0.2) + 0.1 * (ic + 0.3)
        ));
    }
    std::fs::write(dir.path().join("data.csv"), data).unwrap();
    let cfg = dir.path().join("fit.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nmode = \"j1\"\ndata = \"data.csv\"\n",
    )
    .unwrap();
    let out = hmw(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("i0"));
}
