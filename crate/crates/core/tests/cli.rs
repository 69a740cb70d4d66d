use std::path::Path;
use std::process::{Command, Output};

use wgeig::expcli::{run_cli, CSV_HEADER};

fn wgeig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgeig")).args(args).output().expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn iterate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = wgeig(&[
        "iterate", "--fine-n", "16", "--coarse-n", "4", "--k", "2", "--iters", "4", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5 * 2);
    for row in &rows {
        assert_eq!(row.len(), 7);
        let a_err: f64 = row[3].parse().unwrap();
        let b_err: f64 = row[4].parse().unwrap();
        assert!(a_err >= 0.0 && b_err >= 0.0);
        // 17 significant digits in scientific notation
        assert!(row[2].contains('e') && row[2].split('e').next().unwrap().len() == 18);
    }
    assert_eq!(rows[0][5], "");
    let summary: serde_json::Value = serde_json::from_str(&read(&out.with_extension("summary.json"))).unwrap();
    assert_eq!(summary["runs"][0]["coarse_n"], 4);
    assert!(summary["runs"][0]["step_seconds"].as_array().unwrap().len() == 5);
}

#[test]
fn iterate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = wgeig(&[
            "iterate", "--fine-n", "16", "--coarse-n", "4", "--k", "3", "--iters", "3", "--seed", "7", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn iterate_multiple_coarse_meshes_get_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = wgeig(&["iterate", "--fine-n", "16", "--coarse-n", "2,4", "--iters", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("t_n2.csv").exists());
    assert!(dir.path().join("t_n4.csv").exists());
}

#[test]
fn single_target_converges_to_requested_eigenvalue() {
    let o = wgeig(&[
        "iterate", "--fine-n", "32", "--coarse-n", "8", "--algo", "single", "--target", "4", "--iters", "12",
        "--format", "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reference: Vec<f64> = serde_json::from_value(v["reference"].clone()).unwrap();
    let entries = v["runs"][0]["trace"]["entries"].as_array().unwrap();
    let last = entries.last().unwrap()["lambdas"][0].as_f64().unwrap();
    assert!((last - reference[3]).abs() <= 1e-8 * reference[3]);
    assert!(entries[0]["initial"].as_bool().unwrap());
}

#[test]
fn solve_reports_first_eigenvalue() {
    let o = wgeig(&["solve", "--fine-n", "16", "--k", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let l1 = v["eigenvalues"][0].as_f64().unwrap();
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    assert!((l1 - exact).abs() / exact < 0.02);
    assert!(v["residuals"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() <= 1e-10));
    assert!(v.get("eigenvectors").is_none());
}

#[test]
fn solve_error_shrinks_quadratically() {
    // observed: the P0 error in the first eigenvalue drops by roughly 4x per halving of h
    let lambda = |n: &str| {
        let o = wgeig(&["solve", "--fine-n", n, "--k", "1"]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["eigenvalues"][0].as_f64().unwrap()
    };
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    let ratio = (lambda("16") - exact).abs() / (lambda("32") - exact).abs();
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rates_table() {
    let o = wgeig(&["rates", "--fine-n", "32", "--coarse-n", "4,8", "--iters", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["ratio"].is_null());
    let ratio = rows[1]["ratio"].as_f64().unwrap();
    assert!(ratio > 1.0);
    let f0 = rows[0]["a_factor"].as_f64().unwrap();
    assert!(f0 > 0.0 && f0 < 1.0);

    let csv = wgeig(&["rates", "--fine-n", "32", "--coarse-n", "4,8", "--iters", "10", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("coarse_n,target,a_factor,b_factor,points,floor,ratio,status\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(wgeig(&["iterate", "--k", "0"]).status.code(), Some(1));
    assert_eq!(wgeig(&["iterate", "--fine-n", "64", "--coarse-n", "24"]).status.code(), Some(1));
    assert_eq!(wgeig(&["rates", "--coarse-n", "8"]).status.code(), Some(1));
    assert_eq!(wgeig(&["solve", "--degree", "3"]).status.code(), Some(1));
    assert_eq!(wgeig(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(wgeig(&["solve", "--fine-n", "2", "--k", "50"]).status.code(), Some(2));
    // too few iterations for a three-point fit
    assert_eq!(wgeig(&["rates", "--fine-n", "16", "--coarse-n", "4,8", "--iters", "2"]).status.code(), Some(2));
    assert_eq!(wgeig(&["--help"]).status.code(), Some(0));
}

#[test]
fn in_process_entry_point() {
    assert_eq!(run_cli(["wgeig", "solve", "--fine-n", "4", "--k", "1", "--format", "csv"]), 0);
    assert_eq!(run_cli(["wgeig", "iterate", "--target", "0"]), 1);
}
