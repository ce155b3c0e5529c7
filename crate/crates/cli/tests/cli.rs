use std::path::Path;
use std::process::{Command, Output};

use helfrich::io::{read_mesh_path, write_mesh_path};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helfrich-disc"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn mesh_on_unit_square_has_two_n_squared_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let out = run(
        dir.path(),
        &["mesh", "--pattern", "right", "--n", "8", "--domain", "unit-square", "--out", path.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let file = read_mesh_path(&path).unwrap();
    assert_eq!(file.mesh.triangles().len(), 128);
    assert!(file.nodal.is_none());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("helfrich-disc v1"));
}

#[test]
fn written_mesh_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["mesh", "--surface", "saddle", "--pattern", "crisscross", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("mesh.txt");
    let first = read_mesh_path(&path).unwrap();
    let copy = dir.path().join("copy.txt");
    write_mesh_path(&copy, &first).unwrap();
    assert_eq!(read_mesh_path(&copy).unwrap(), first);
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["mesh", "--pattern", "zigzag"][..],
        &["energy", "--surface", "torus"][..],
        &["energy", "--quad-order", "11"][..],
        &["converge", "--refinements", "2"][..],
        &["frobnicate"][..],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn plane_energy_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["energy", "--surface", "plane", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[2].abs() <= 1e-14 && row[3].abs() <= 1e-14, "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("energy.json")).unwrap()).unwrap();
    assert!(json["discrete"]["total"].as_f64().unwrap().abs() <= 1e-14);
}

#[test]
fn fd_flag_adds_a_column() {
    let dir = tempfile::tempdir().unwrap();
    let plain = stdout(&run(dir.path(), &["energy", "--surface", "paraboloid", "--n", "8"]));
    assert!(!plain.lines().next().unwrap().contains("E_fd"));
    let with_fd = stdout(&run(dir.path(), &["energy", "--surface", "paraboloid", "--n", "8", "--fd"]));
    let header: Vec<&str> = with_fd.lines().next().unwrap().split(',').collect();
    assert_eq!(header[4], "E_fd");
    let csv = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert_eq!(csv, with_fd);
}

#[test]
fn degenerate_dual_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["energy", "--surface", "flat", "--n", "2", "--fd"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edge"));
}

#[test]
fn corrupted_director_file_fails_verification_with_edge_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["optimize", "--surface", "paraboloid", "--n", "4", "--family", "unit"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("optimized.txt");
    let mut file = read_mesh_path(&path).unwrap();
    let (_, entries) = file.directors.as_mut().unwrap();
    let key = entries[5].0;
    entries[5].1 *= 1.1;
    let corrupted = dir.path().join("corrupted.txt");
    write_mesh_path(&corrupted, &file).unwrap();

    let out = run(
        dir.path(),
        &[
            "verify",
            "--surface",
            "paraboloid",
            "--directors",
            "file",
            "--family",
            "unit",
            "--mesh-file",
            corrupted.to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let failure = &json["failures"][0];
    assert_eq!(failure["check"], "director constraints");
    assert_eq!(failure["edge"], serde_json::json!([key.0, key.1]));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("({}, {})", key.0, key.1)));
}

#[test]
fn optimized_pseudo_energy_beats_projected_recovery_at_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["converge", "--surface", "saddle", "--n", "4", "--refinements", "3", "--directors", "optimize", "--family", "pseudo_unit"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("converge.json")).unwrap()).unwrap();
    let levels = json["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    for level in levels {
        let optimized = level["e_discrete"].as_f64().unwrap();
        let recovery = level["e_recovery"].as_f64().unwrap();
        assert!(optimized <= recovery + 1e-12, "{optimized} > {recovery}");
    }
}

#[test]
fn flat_verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--surface", "flat", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("vacuous"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, "[surface]\nname = \"plane\"\n[mesh]\nn = 4\n").unwrap();
    let out = run(dir.path(), &["energy", "--config", config.to_str().unwrap(), "--surface", "paraboloid"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("energy.json")).unwrap()).unwrap();
    assert_eq!(json["surface"], "paraboloid");
    assert!(json["discrete"]["total"].as_f64().unwrap() > 1.0);
}
