use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn qvlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvlab")).arg("--out").arg(out).args(args).output().unwrap()
}

#[test]
fn negative_radius_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[model]\nkind = \"flat\"\nm = 3\n\n[domain]\nkind = \"ball\"\nouter = -1.0\nelements = 10\n",
    )
    .unwrap();
    let out = qvlab(dir.path(), &["tone", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain.outer"));
}

#[test]
fn hardy_table_approaches_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = qvlab(dir.path(), &["hardy-table", scenario("hardy_h3.toml").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("hardy_table.csv")).unwrap();
    let chi_col = rdr.headers().unwrap().iter().position(|h| h == "chi").unwrap();
    let last = rdr.records().last().unwrap().unwrap();
    let chi: f64 = last[chi_col].parse().unwrap();
    assert!((chi - 1.0).abs() < 1e-4, "{chi}");
}

#[test]
fn solve_output_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = qvlab(dir.path(), &["solve", scenario("solve_h3.toml").to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let json = std::fs::read(dir.path().join("solve.json")).unwrap();
        let csv = std::fs::read(dir.path().join("solution.csv")).unwrap();
        (json, csv)
    };
    assert_eq!(run(), run());
}

#[test]
fn green_on_the_plane_is_not_subcritical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plane.toml");
    std::fs::write(&path, "[model]\nkind = \"flat\"\nm = 2\n").unwrap();
    let out = qvlab(dir.path(), &["green", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotSubcritical"));
}

#[test]
fn every_bundled_scenario_runs() {
    for (cmd, file) in [
        ("hardy-table", "hardy_h3.toml"),
        ("green", "green_h3.toml"),
        ("tone", "tone_annulus.toml"),
        ("capacity", "capacity_r3.toml"),
        ("classify", "classify_r2.toml"),
        ("solve", "solve_sequence.toml"),
        ("yamabe", "yamabe_h4.toml"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = qvlab(dir.path(), &[cmd, scenario(file).to_str().unwrap()]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unknown_subcommand_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qvlab(dir.path(), &["frobnicate"]).status.code(), Some(2));
}
