use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn orthokin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthokin"))
        .args(args)
        .env_remove("ORTHOKIN_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn number(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn analyze_isotropic_point() {
    let out = orthokin(&["analyze", "--point", "0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["singularity"]["kind"], "regular");
    assert_eq!(number(&report["performance"]["kappa"]), 1.0);
    for psi in report["performance"]["psi"].as_array().unwrap() {
        assert_eq!(number(psi), 1.0);
    }
    assert!(report["infeasibility"].is_null());
}

#[test]
fn analyze_unreachable_and_singular_points() {
    let out = orthokin(&["analyze", "--point", "0,1.5,0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = orthokin(&["analyze", "--point", "0,1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(
        report["singularity"]["serial_legs"],
        serde_json::json!([0, 2])
    );
    assert!(
        report["singularity"]["kind"] == "serial_singular"
            || report["singularity"]["kind"] == "both"
    );
    assert!(report["performance"].is_null());
}

#[test]
fn invalid_machine_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("machine.json");
    for text in [r#"{"leg_length": -1}"#, r#"{"leg_lenght": 1}"#, "not json"] {
        std::fs::write(&path, text).unwrap();
        let out = orthokin(&["--machine", path.to_str().unwrap(), "isotropy"]);
        assert_eq!(out.status.code(), Some(3), "{text}");
    }
    let out = orthokin(&["--machine", "/does/not/exist.json", "isotropy"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_arguments_exit_with_invalid_input() {
    assert_eq!(
        orthokin(&["analyze", "--point", "1,2"]).status.code(),
        Some(3)
    );
    assert_eq!(
        orthokin(&["map", "--metric", "volume"]).status.code(),
        Some(3)
    );
    assert_eq!(
        orthokin(&["workspace", "--depth", "2", "--format", "json"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        orthokin(&["limits", "--format", "csv"]).status.code(),
        Some(3)
    );
    assert_eq!(
        orthokin(&["map", "--region", "-9,-9,-9,9,9,9"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(orthokin(&["--help"]).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_orthokin"))
        .args(["isotropy"])
        .env("ORTHOKIN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kappa_map_is_one_at_the_centre() {
    let out = orthokin(&[
        "map",
        "--region",
        "-0.5,-0.5,-0.5,0.5,0.5,0.5",
        "--resolution",
        "3",
        "--metric",
        "kappa",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,y,z,value");
    assert_eq!(rows.len(), 1 + 27);
    let centre: Vec<f64> = rows[1 + 13]
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(centre, vec![0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn infeasible_samples_are_nan_and_empty_regions_give_a_header() {
    let out = orthokin(&[
        "map",
        "--region",
        "0.9,0.9,0.9,1.0,1.0,1.0",
        "--resolution",
        "2",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",nan")));

    let out = orthokin(&["map", "--region", "0.5,0,0,-0.5,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "x,y,z,value\n");
}

#[test]
fn psi_map_respects_synthesized_limits() {
    let dir = tempfile::tempdir().unwrap();
    let limits_path = dir.path().join("limits.json");
    let out = orthokin(&["limits", "--out", limits_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let limits: Value =
        serde_json::from_str(&std::fs::read_to_string(&limits_path).unwrap()).unwrap();
    assert!(number(&limits["cube_edge"]) > 0.0);

    let machine = serde_json::json!({ "leg_length": 1.0, "joint_limits": limits["limits"] });
    let machine_path = dir.path().join("machine.json");
    std::fs::write(&machine_path, machine.to_string()).unwrap();
    let out = orthokin(&[
        "--machine",
        machine_path.to_str().unwrap(),
        "map",
        "--region",
        "-0.5,-0.5,-0.5,0.5,0.5,0.5",
        "--resolution",
        "15",
        "--metric",
        "psi-max",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .filter(|v| *v != "nan")
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(!values.is_empty());
    assert!(values.iter().all(|&v| v <= 3.0 + 1e-6));
}

#[test]
fn collapsed_limits_are_an_infeasible_result() {
    let out = orthokin(&[
        "limits",
        "--psi-min",
        "1",
        "--psi-max",
        "1",
        "--resolution",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(number(&json(&out)["cube_edge"]) < 1e-3);
}

#[test]
fn workspace_mesh_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let ply = dir.path().join("ws.ply");
    let out = orthokin(&["workspace", "--depth", "6", "--out", ply.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert_eq!(summary["components"], 1);
    assert!(number(&summary["volume_lower"]) <= number(&summary["volume_upper"]));
    let mesh = std::fs::read_to_string(&ply).unwrap();
    assert!(mesh.starts_with("ply\nformat ascii 1.0\n"));

    let out = orthokin(&["workspace", "--depth", "4"]);
    assert_eq!(out.status.code(), Some(3), "ply without --out");
}

#[test]
fn workspace_section_csv() {
    let out = orthokin(&[
        "workspace",
        "--depth",
        "4",
        "--format",
        "csv",
        "--axis",
        "x",
        "--offset",
        "-0.1",
        "--resolution",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "axis,offset,resolution");
    assert_eq!(rows[1], "x,-1.0000000000000001e-1,8");
    assert_eq!(rows.len(), 10);
    assert!(rows[2..].iter().any(|r| r.contains('1')));
}

#[test]
fn limits_drive_the_workspace() {
    let out = orthokin(&[
        "workspace",
        "--depth",
        "5",
        "--format",
        "json",
        "--synthesize-limits",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert_eq!(summary["joint_limits"].as_array().unwrap().len(), 3);
    let cube = &summary["inscribed_cube"];
    assert!(cube["cells"].as_u64().unwrap() > 0);
}

#[test]
fn isotropy_of_the_canonical_and_a_scaled_machine() {
    for args in [vec!["isotropy"], vec!["--leg-length", "0.25", "isotropy"]] {
        let out = orthokin(&args);
        assert_eq!(out.status.code(), Some(0));
        let report = json(&out);
        assert!(number(&report["max_residual"]) < 1e-10);
        assert_eq!(report["isotropic"], true);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_orthokin"))
            .args(["map", "--resolution", "9", "--metric", "psi-min", "--out"])
            .arg(&path)
            .env("ORTHOKIN_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(Path::new(&path)).unwrap()
    };
    let one = run("1", "a.csv");
    let four = run("4", "b.csv");
    assert_eq!(one, four);
    assert!(String::from_utf8(one).unwrap().contains("nan"));
}
