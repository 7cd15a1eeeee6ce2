use std::process::{Command, Output};

use hexdiv::mesh::Mesh;

fn hexdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexdiv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn study_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = hexdiv(&[
        "study",
        "--mesh",
        "cube",
        "--n",
        "2,4",
        "--space",
        "at0",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "mesh",
            "n",
            "cells",
            "mult_dofs",
            "p_err",
            "p_ord",
            "u_err",
            "u_ord",
            "div_err",
            "div_ord"
        ]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][3], "36");
    assert_eq!(&rows[0][4], "2.417e-1");
    assert_eq!(&rows[0][5], "");
    assert_eq!(&rows[1][2], "64");
}

#[test]
fn study_is_deterministic() {
    let args = [
        "study", "--mesh", "pillar", "--n", "2,4", "--space", "at1red", "--format", "md",
    ];
    let a = hexdiv(&args);
    let b = hexdiv(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains(" 108 |"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["study", "--mesh", "cube", "--n", "4,2", "--space", "at0"],
        vec!["study", "--mesh", "cube", "--n", "2", "--space", "atr:7"],
        vec!["study", "--mesh", "pillar", "--n", "3", "--space", "at0"],
        vec![
            "study",
            "--mesh",
            "cube",
            "--n",
            "2",
            "--space",
            "at1",
            "--at1-mode",
            "sideways",
        ],
        vec!["study", "--mesh", "sphere", "--n", "2", "--space", "at0"],
        vec!["verify", "everything"],
    ] {
        let o = hexdiv(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failing_cell_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut mesh: serde_json::Value =
        serde_json::from_str(&Mesh::gen_cube(2).unwrap().to_json()).unwrap();
    // turn cell 5 inside out by swapping its bottom and top layers
    let cell = mesh["cells"][5].as_array().unwrap().clone();
    let flipped: Vec<_> = (0..8).map(|i| cell[i ^ 4].clone()).collect();
    mesh["cells"][5] = serde_json::Value::Array(flipped);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, mesh.to_string()).unwrap();
    let o = hexdiv(&[
        "study",
        "--mesh",
        "file",
        "--mesh-file",
        path.to_str().unwrap(),
        "--space",
        "at1",
        "--at1-mode",
        "symmetric",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("element 5"));
}

#[test]
fn mesh_files_reproduce_generated_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    std::fs::write(&p, Mesh::gen_pillar(2).unwrap().to_json()).unwrap();
    let a = hexdiv(&[
        "study",
        "--mesh",
        "file",
        "--mesh-file",
        p.to_str().unwrap(),
        "--space",
        "rt0",
        "--format",
        "csv",
    ]);
    let b = hexdiv(&[
        "study", "--mesh", "pillar", "--n", "2", "--space", "rt0", "--format", "csv",
    ]);
    assert!(a.status.success() && b.status.success());
    let strip = |o: &Output| {
        stdout(o)
            .lines()
            .nth(1)
            .unwrap()
            .split_once(',')
            .unwrap()
            .1
            .to_string()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn check_element_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("cube.json");
    std::fs::write(
        &cube,
        r#"{"vertices":[[0,0,0],[1,0,0],[0,1,0],[1,1,0],[0,0,1],[1,0,1],[0,1,1],[1,1,1]]}"#,
    )
    .unwrap();
    let o = hexdiv(&["check-element", cube.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("parallel face pairs: 3"));
    assert!(s.contains("det(C∘H): 1.000000e0"));

    let pillar = dir.path().join("pillar.json");
    std::fs::write(&pillar, r#"{"vertices":[[0,0,0],[1.1,0,0.055],[0,0.9,0.018],[1.2,1,0.08],[0,0,1],[1.1,0,1.11],[0,0.9,0.955],[1.2,1,1.07]]}"#).unwrap();
    let o = hexdiv(&["check-element", pillar.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("truncated pillar: true"));
    assert!(!s.contains("det(C∘H): 0.000000e0"));

    let warped = dir.path().join("warped.json");
    std::fs::write(
        &warped,
        r#"{"vertices":[[0,0,0],[1,0,0],[0,1,0],[1,1,0.3],[0,0,1],[1,0,1],[0,1,1],[1,1,1]]}"#,
    )
    .unwrap();
    let o = hexdiv(&["check-element", warped.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not flat"));
}

#[test]
fn verify_suite_with_seed_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_hexdiv"))
        .args(["verify", "lemma51"])
        .env("HEXDIV_SEED", "7")
        .output()
        .unwrap();
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("(seed 7)"));
    assert!(s.contains("1000/1000"));
    assert!(s.contains("0 failures"));
}
