use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_trapcorr"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .output()
        .unwrap()
}

fn data_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn column(lines: &[String], name: &str) -> Vec<String> {
    let idx = lines[0].split(',').position(|c| c == name).unwrap();
    lines[1..].iter().map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "[grid.x]\nstart = -1.0\nstop = 1.0\ncount = 0\n", &["density"]);
    assert!(out.status.success());
    assert_eq!(data_lines(&out), vec!["x,rho_tf".to_string()]);
    let out = run(dir.path(), "", &["spectrum", "--n-max", "0"]);
    assert_eq!(data_lines(&out), vec!["n,E_n,dE,dE_expansion".to_string()]);
}

#[test]
fn density_is_clipped_parabola() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "[grid.x]\nstart = -2.0\nstop = 2.0\ncount = 81\n", &["density"]);
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 82);
    for row in &lines[1..] {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        let want = if v[0].abs() < 2f64.sqrt() { 1.0 - v[0] * v[0] / 2.0 } else { 0.0 };
        assert!((v[1] - want).abs() < 1e-15, "{row}");
    }
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "[params]\ngee = 2.0\n", &["density"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gee"));
    let out = run(dir.path(), "[params]\nbeta = -1.0\n", &["density"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[params]\nomega = 1.4142135623730951\nbeta = 0.05\n\
               [grid.x1]\nstart = -0.05\nstop = 0.05\ncount = 5\n\
               [grid.tau1]\nvalues = [0.0, 0.01]\n";
    let a = run(dir.path(), cfg, &["green", "--mode", "trapped-spectral", "--threads", "3"]);
    let b = run(dir.path(), cfg, &["green", "--mode", "trapped-spectral"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn coincident_points_report_divergent_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid.x1]\nvalues = [0.0, 0.2]\n";
    let out = run(dir.path(), cfg, &["green", "--mode", "homog-series"]);
    assert!(out.status.success());
    let status = column(&data_lines(&out), "status");
    assert_eq!(status, vec!["divergent", "ok"]);
}

#[test]
fn equal_points_give_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid.x1]\nvalues = [0.3]\n[grid.x2]\nvalues = [0.3]\n";
    let out = run(dir.path(), cfg, &["correlator", "--mode", "closed-form"]);
    let g: f64 = column(&data_lines(&out), "gamma")[0].parse().unwrap();
    assert!((g - (1.0 - 0.09 / 2.0)).abs() < 1e-15);
}

#[test]
fn oracle_agrees_with_spectral_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[params]\nomega = 1.4142135623730951\n\
               [grid]\nomega = [0.0, 6.283185307179586]\n\
               [grid.x1]\nvalues = [-0.5, 0.1, 0.6]\n[grid.x2]\nvalues = [0.2]\n";
    let fdm = data_lines(&run(dir.path(), cfg, &["green", "--mode", "oracle"]));
    let spectral = data_lines(&run(dir.path(), cfg, &["green", "--mode", "trapped-spectral"]));
    let f: Vec<f64> = column(&fdm, "G_re").iter().map(|s| s.parse().unwrap()).collect();
    let s: Vec<f64> = column(&spectral, "G_re").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(f.len(), 6);
    for block in [0, 3] {
        for i in 1..3 {
            let (df, ds) = (f[block + i] - f[block], s[block + i] - s[block]);
            assert!((df - ds).abs() < 1e-3 * ds.abs(), "{df} vs {ds}");
        }
    }
}

#[test]
fn json_mirrors_csv_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "", &["spectrum", "--n-max", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["rows"][0]["E_n"], serde_json::json!(0.0));
    assert!(v["meta"]["config"]["params"].is_object());
}

#[test]
fn exponent_fit_matches_theta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[params]\nomega = 1.4142135623730951\nbeta = 100.0\n\
               [truncation]\nmin_dtau = 1e-4\n\
               [grid.separation]\ncenter = 0.1\naxis = \"tau\"\nstart = 0.012\nstop = 0.045\ncount = 12\n";
    let out = run(dir.path(), cfg, &["exponent", "--mode", "series"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rel: f64 = column(&data_lines(&out), "rel_diff")[0].parse().unwrap();
    assert!(rel.abs() < 0.05);
}

#[test]
fn tightened_tolerance_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[validate]\noracle_n = 2001\n[validate.tolerance]\noracle-equivalence = 1e-15\n";
    let out = run(dir.path(), cfg, &["validate"]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    let failed: Vec<&str> = rows.iter().filter(|r| r["passed"] == false).map(|r| r["check"].as_str().unwrap()).collect();
    assert_eq!(failed, vec!["oracle-equivalence"]);
}
