//! Runs the `cris` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cris(out: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cris"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_clear()
        .envs(env.iter().copied())
        .output()
        .expect("cris runs")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn geometry_dump_lists_every_element() {
    let dir = tempfile::tempdir().unwrap();
    let out = cris(dir.path(), &["--elements-m", "4", "--elements-n", "3", "geometry-dump", "--radius", "2"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("geometry.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "m,n,psi_m,x,y,z,nx,ny,nz");
    assert_eq!(text.lines().count(), 1 + 12);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("geometry.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["subcommand"], "geometry-dump");
    assert_eq!(meta["config"]["elements_m"], 4);
}

#[test]
fn phase_dump_header_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = cris(
        dir.path(),
        &["--elements-m", "6", "--elements-n", "2", "phase-dump", "--kind", "optimal", "--theta-i-deg", "-20"],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "m,n,psi_m,phase_rad,amplitude");
    for l in lines {
        let phase: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
        assert!((0.0..std::f64::consts::TAU).contains(&phase));
    }
}

#[test]
fn blockage_table_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = cris(dir.path(), &["--trials", "50", "--rho", "10", "--r-d", "100", "blockage"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("blockage.csv");
    assert_eq!(header(&path), "rho,r_d,mode,p_block,ci_low,ci_high,trials");
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1 + 3);
}

#[test]
fn gain_elevation_writes_one_file_per_radius() {
    let dir = tempfile::tempdir().unwrap();
    let out = cris(dir.path(), &["--sweep-step-deg", "5", "--radii-m", "2,8", "gain-elevation"], &[]);
    assert!(out.status.success());
    for r in ["2", "8"] {
        let p = dir.path().join(format!("gain_elevation_r{r}.csv"));
        assert_eq!(header(&p), "angle_deg,gain_db_cirs,gain_db_flat,gain_db_bare");
    }
}

#[test]
fn scenario_dump_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(cris(a.path(), &["scenario-dump", "--trial", "3"], &[]).status.success());
    assert!(cris(b.path(), &["scenario-dump", "--trial", "3"], &[("CRIS_SEED", "9")]).status.success());
    let ja = fs::read_to_string(a.path().join("scenario.json")).unwrap();
    let jb = fs::read_to_string(b.path().join("scenario.json")).unwrap();
    assert_ne!(ja, jb);
    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    assert!(v["vehicles"].as_array().unwrap().len() >= 2);
}

#[test]
fn flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = cris(
        dir.path(),
        &["--seed", "5", "geometry-dump"],
        &[("CRIS_SEED", "9"), ("CRIS_ELEMENTS_M", "2"), ("CRIS_ELEMENTS_N", "1")],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("geometry.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["config"]["elements_m"], 2);
}

#[test]
fn invalid_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    let out = cris(dir.path(), &["--config", cfg.to_str().unwrap(), "geometry-dump"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let out = cris(dir.path(), &["--elements-m", "3", "geometry-dump"], &[]);
    assert!(!out.status.success());

    let out = cris(dir.path(), &["--tx-power", "10", "geometry-dump"], &[]);
    assert!(!out.status.success(), "power without a unit must be rejected");
}
