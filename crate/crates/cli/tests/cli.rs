use std::path::Path;
use std::process::Command;

use cloak_cli::{dispatch, dump_path};
use cloak_core::meshgen::Mesh;
use cloak_core::spectra::ite_disk_oracle;

fn run(args: &[&str]) -> i32 {
    dispatch(std::iter::once("cloak").chain(args.iter().copied()))
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn leftovers(dir: &Path) -> Vec<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

#[test]
fn mesh_command_writes_a_valid_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let code = run(&[
        "mesh",
        "--shape",
        "disk",
        "--radius",
        "2",
        "--h",
        "0.1",
        "--interface",
        "1",
        "--out",
        arg(&out),
    ]);
    assert_eq!(code, 0);
    let mesh = Mesh::load(&out).unwrap();
    assert!(!mesh.interface_nodes().is_empty());
    assert!((mesh.total_area() - 4.0 * std::f64::consts::PI).abs() < 0.05);
    assert_eq!(leftovers(dir.path()), vec!["m.json".to_string()]);
}

#[test]
fn other_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    assert_eq!(
        run(&[
            "mesh",
            "--shape",
            "ellipse",
            "--a",
            "1.3",
            "--b",
            "0.8",
            "--h",
            "0.1",
            "--out",
            arg(&out)
        ]),
        0
    );
    assert!(Mesh::load(&out).unwrap().validate().is_ok());
    let out = dir.path().join("a.json");
    assert_eq!(
        run(&[
            "mesh",
            "--shape",
            "annulus",
            "--interface",
            "0.5",
            "--radius",
            "2",
            "--out",
            arg(&out)
        ]),
        0
    );
    assert!(Mesh::load(&out).unwrap().inner_boundary().is_some());
    assert_eq!(run(&["mesh", "--shape", "annulus", "--out", arg(&out)]), 2);
}

#[test]
fn sweep_example_decreases_and_dumps_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let code = run(&[
        "sweep",
        "--eps",
        "0.4,0.2,0.1,0.05",
        "--omega",
        "1",
        "--modes",
        "8",
        "--target-g",
        "iso:3",
        "--target-q",
        "2",
        "--dump-dtn",
        "--out",
        arg(&out),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,dtn_error,dofs,omega,modes"));
    let errors: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 4);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let dump: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dump_path(&out)).unwrap()).unwrap();
    assert_eq!(dump["sweep"].as_array().unwrap().len(), 4);
    assert_eq!(dump["free"]["modes"], 8);
}

#[test]
fn ite_example_matches_the_oracle_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ite.json");
    assert_eq!(
        run(&["ite", "--q", "4", "--count", "6", "--h", "0.03", "--out", arg(&out)]),
        0
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let smallest = v["eigenvalues"][0].as_f64().unwrap();
    let oracle = ite_disk_oracle(4.0, 21, 4).unwrap()[0].1;
    assert!((smallest / oracle - 1.0).abs() <= 0.015, "{smallest} vs {oracle}");
    assert_eq!(v["problem"], "ite");
}

#[test]
fn pushforward_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let code = run(&[
        "pushforward",
        "--map",
        "regcloak:0.5",
        "--h",
        "0.2",
        "--format",
        "csv",
        "--out",
        arg(&out),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x,y,g11,g12,g22,q\n"));
    for line in text.lines().skip(1) {
        let row: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        // symmetric positive definite with positive q
        assert!(row[2] > 0.0 && row[4] > 0.0 && row[2] * row[4] > row[3] * row[3] && row[5] > 0.0);
    }
    let out = dir.path().join("p.json");
    assert_eq!(
        run(&[
            "pushforward",
            "--map",
            "bump:0.1",
            "--seed",
            "3",
            "--h",
            "0.2",
            "--out",
            arg(&out)
        ]),
        0
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["map"], "bump:0.1:3");
    assert_eq!(v["skipped"], 0);
}

#[test]
fn failures_map_to_exit_codes_and_leave_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = arg(&out);
    assert_eq!(run(&["mesh", "--h", "-1", "--out", o]), 2);
    assert_eq!(run(&["mesh", "--omega", "1", "--out", o]), 2);
    assert_eq!(run(&["sweep", "--eps", "0,0.1", "--out", o]), 2);
    assert_eq!(run(&["ite", "--format", "csv", "--q", "0", "--out", o]), 2);
    assert_eq!(run(&["dtn", "--target-g", "full:1", "--out", o]), 2);
    assert_eq!(run(&["frobnicate", "--out", o]), 2);
    // ω = j_{1,1}/2 is a Dirichlet resonance of the free radius-2 disk
    assert_eq!(
        run(&["dtn", "--omega", "1.915852985103756", "--h", "0.1", "--out", o]),
        3
    );
    assert_eq!(run(&["schiffer", "--h", "0.25", "--lambda-max", "400", "--out", o]), 4);
    assert!(leftovers(dir.path()).is_empty());
    assert_eq!(run(&["mesh", "--out", arg(&dir.path().join("missing/m.json"))]), 1);
}

#[test]
fn binary_reports_one_line_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_cloak");
    let out = Command::new(bin)
        .args(["sweep", "--eps", "2", "--out", arg(&dir.path().join("s.csv"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: parameter: "), "{err}");
    let ok = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
}
