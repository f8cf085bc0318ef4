use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const F3: &str = "sin(x)+exp(y)+(x+y)^2";

struct Run {
    code: i32,
    stdout: String,
    record: Value,
}

fn run_in(dir: &Path, args: &[&str]) -> Run {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_ridge-split"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let record = stdout
        .lines()
        .last()
        .and_then(|l| serde_json::from_str(l).ok())
        .unwrap_or(Value::Null);
    Run {
        code: out.status.code().expect("exit code"),
        stdout,
        record,
    }
}

fn write_samples(dir: &Path, name: &str, n: usize, f: impl Fn(f64, f64) -> f64) -> PathBuf {
    let mut text = String::from("x,y,f\n");
    for j in 0..n {
        for i in 0..n {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            writeln!(text, "{x:?},{y:?},{:?}", f(x, y)).unwrap();
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn decompose_f3(dir: &Path) -> Run {
    run_in(
        dir,
        &["decompose", "--f", F3, "--dirs", "1,0;0,1;1,1", "--domain", "-1,1,-1,1", "--grid", "1025", "--method", "symbolic", "--out", "d.json"],
    )
}

#[test]
fn check_dirs_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let ok = run_in(tmp.path(), &["check-dirs", "--dirs", "1,0;0,1;1,1"]);
    assert_eq!(ok.code, 0);
    assert_eq!(ok.record["valid"], true);
    assert_eq!(ok.record["pairs"].as_array().unwrap().len(), 3);

    let dep = run_in(tmp.path(), &["check-dirs", "--dirs", "1,2;2,4"]);
    assert_eq!(dep.code, 1);
    assert_eq!(dep.record["offending"], serde_json::json!([0, 1]));

    let bad = run_in(tmp.path(), &["check-dirs", "--dirs", "1,0;;0,1"]);
    assert_eq!(bad.code, 2);
    assert_eq!(bad.record["status"], "error");
}

#[test]
fn decompose_then_verify() {
    let tmp = TempDir::new().unwrap();
    let dec = decompose_f3(tmp.path());
    assert_eq!(dec.code, 0, "{}", dec.stdout);
    assert!(dec.record["reconstruction_sup_error"].as_f64().unwrap() <= 1e-6);
    assert!(dec.stdout.contains("separation_defect"));
    assert!(tmp.path().join("d.json").exists());

    let v = run_in(tmp.path(), &["verify", "--decomposition", "d.json"]);
    assert_eq!(v.code, 0, "{}", v.stdout);
    assert_ne!(v.record["grid"], v.record["stored_grid"]);

    let same = run_in(tmp.path(), &["verify", "--decomposition", "d.json", "--grid", "101"]);
    assert_eq!(same.code, 2);

    let perturbed = format!("{F3} + 0.01*x");
    let p = run_in(tmp.path(), &["verify", "--decomposition", "d.json", "--f", &perturbed]);
    assert_eq!(p.code, 1);
    let err = p.record["sup_error"].as_f64().unwrap();
    assert!((err - 0.01).abs() < 1e-6, "{err}");
}

#[test]
fn truncated_decomposition_is_a_format_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(decompose_f3(tmp.path()).code, 0);
    let text = std::fs::read_to_string(tmp.path().join("d.json")).unwrap();
    std::fs::write(tmp.path().join("t.json"), &text[..text.len() / 2]).unwrap();
    let v = run_in(tmp.path(), &["verify", "--decomposition", "t.json"]);
    assert_eq!(v.code, 2);
    assert_eq!(v.record["kind"], "format");
}

#[test]
fn shrunken_profile_range_is_reported() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(decompose_f3(tmp.path()).code, 0);
    // widen the stored domain beyond what the profiles cover
    let text = std::fs::read_to_string(tmp.path().join("d.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["domain"][1] = serde_json::json!(3.0);
    std::fs::write(tmp.path().join("w.json"), serde_json::to_string(&v).unwrap()).unwrap();
    let r = run_in(tmp.path(), &["verify", "--decomposition", "w.json"]);
    assert_eq!(r.code, 2, "{}", r.stdout);
    assert_eq!(r.record["kind"], "range");
    assert!(r.record["details"]["profile_range"].is_array());
}

#[test]
fn non_ridge_sum_exits_with_the_defect() {
    let tmp = TempDir::new().unwrap();
    let r = run_in(tmp.path(), &["decompose", "--f", "exp(x*y)", "--dirs", "1,0;0,1;1,1", "--out", "e.json"]);
    assert_eq!(r.code, 3);
    assert_eq!(r.record["kind"], "representability");
    assert!(r.record["details"]["defect"].as_f64().unwrap() > 1e-2);
    assert!(!tmp.path().join("e.json").exists());
}

#[test]
fn sample_input_paths() {
    let tmp = TempDir::new().unwrap();
    let small = write_samples(tmp.path(), "small.csv", 32, |x, y| x + y);
    let r = run_in(tmp.path(), &["decompose", "--samples", small.to_str().unwrap(), "--dirs", "1,0;0,1;1,1"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.record["kind"], "ingest");

    write_samples(tmp.path(), "g.csv", 257, |x, y| x.sin() + y.exp() + (x + y).powi(2));
    let sym = run_in(
        tmp.path(),
        &["decompose", "--samples", "g.csv", "--dirs", "1,0;0,1;1,1", "--method", "symbolic"],
    );
    assert_eq!(sym.code, 2);

    let num = run_in(tmp.path(), &["decompose", "--samples", "g.csv", "--dirs", "1,0;0,1;1,1", "--grid", "513"]);
    assert_eq!(num.code, 0, "{}", num.stdout);
    assert_eq!(num.record["method"], "numeric");
    assert!(num.record["reconstruction_sup_error"].as_f64().unwrap() < 1e-2);

    let v = run_in(tmp.path(), &["verify", "--decomposition", "decomposition.json", "--samples", "g.csv", "--tol", "1e-3"]);
    assert_eq!(v.code, 0, "{}", v.stdout);
}

#[test]
fn plot_data_files() {
    let tmp = TempDir::new().unwrap();
    let r = run_in(
        tmp.path(),
        &["decompose", "--f", F3, "--dirs", "1,0;0,1;1,1", "--grid", "257", "--stage-tol", "1e-6", "--emit-plot-data", "plots"],
    );
    assert_eq!(r.code, 0, "{}", r.stdout);
    for i in 0..3 {
        let text = std::fs::read_to_string(tmp.path().join(format!("plots/profile_{i}.dat"))).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 257);
        assert!(rows.iter().all(|l| l.split_whitespace().count() == 2));
    }
    let surface = std::fs::read_to_string(tmp.path().join("plots/surface.dat")).unwrap();
    let rows: Vec<Vec<f64>> = surface
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101 * 101);
    for row in &rows {
        assert_eq!(row.len(), 5);
        assert_eq!(row[4], (row[2] - row[3]).abs());
    }
}

#[test]
fn ridge_defect_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let bad = run_in(tmp.path(), &["ridge-defect", "--f", "exp(x*y)", "--dirs", "1,0;0,1;1,1", "--deltas", "0.2,0.2,0.2"]);
    assert_eq!(bad.code, 3);
    assert!(bad.record["defect"].as_f64().unwrap() > 1e-2);
    let good = run_in(tmp.path(), &["ridge-defect", "--f", F3, "--dirs", "1,0;0,1;1,1", "--deltas", "0.2,0.2,0.2"]);
    assert_eq!(good.code, 0);
    let count = run_in(tmp.path(), &["ridge-defect", "--f", F3, "--dirs", "1,0;0,1;1,1", "--deltas", "0.2,0.2"]);
    assert_eq!(count.code, 2);
}

#[test]
fn pde_verify_modes() {
    let tmp = TempDir::new().unwrap();
    let wave = run_in(tmp.path(), &["pde", "verify", "--factors", "1,1;1,-1", "--u", "(x-y)^3 + sin(x+y)"]);
    assert_eq!(wave.code, 0);
    assert_eq!(wave.record["passed"], true);

    let fail = run_in(tmp.path(), &["pde", "verify", "--factors", "1,0;0,1", "--u", "x*y"]);
    assert_eq!(fail.code, 1);
    assert_eq!(fail.record["max_residual"].as_f64().unwrap(), 1.0);

    let cor = run_in(
        tmp.path(),
        &["pde", "verify", "--factors", "1,1;1,-1", "--u", "(x-y)^3 + (x+y)^2", "--corollary"],
    );
    assert_eq!(cor.code, 0, "{}", cor.stdout);
    assert!(cor.record["max_residual"].as_f64().unwrap() <= 1e-8);

    let defect = run_in(tmp.path(), &["pde", "verify", "--factors", "1,1;1,-1", "--u", "x*y*y", "--corollary"]);
    assert_eq!(defect.code, 3);
}

#[test]
fn pde_solve_writes_samples() {
    let tmp = TempDir::new().unwrap();
    let r = run_in(
        tmp.path(),
        &["pde", "solve", "--factors", "1,0;0,1", "--v", "t^2;sin(t)", "--grid", "41", "--out", "u.csv"],
    );
    assert_eq!(r.code, 0);
    let text = std::fs::read_to_string(tmp.path().join("u.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,f"));
    let mut count = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - (v[1] * v[1] + v[0].sin())).abs() <= 1e-15);
        count += 1;
    }
    assert_eq!(count, 41 * 41);

    // the written table is valid sample input
    let check = run_in(
        tmp.path(),
        &["pde", "verify", "--factors", "1,0;0,1", "--samples", "u.csv", "--tol", "1e-2"],
    );
    assert_eq!(check.code, 0, "{}", check.stdout);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run_in(tmp.path(), &["decompose", "--dirs", "1,0"]).code, 2);
    assert_eq!(run_in(tmp.path(), &["decompose", "--f", "x", "--dirs", "1,0;0,1;1,1", "--grid", "17"]).code, 2);
    assert_eq!(run_in(tmp.path(), &["pde", "verify", "--factors", "1,0", "--u", "sin(t)"]).code, 2);
    assert_eq!(run_in(tmp.path(), &["frobnicate"]).code, 2);
}

#[test]
fn final_records_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cases: [&[&str]; 3] = [
        &["decompose", "--f", F3, "--dirs", "1,0;0,1;1,1", "--grid", "513", "--out", "d.json"],
        &["ridge-defect", "--f", "exp(x*y)", "--dirs", "1,0;0,1;1,1", "--deltas", "0.1,0.2,0.3"],
        &["pde", "verify", "--factors", "2,1;-1,3;1,-1", "--u", "exp(x/2)*sin(y)"],
    ];
    for args in cases {
        let a = run_in(tmp.path(), args);
        let b = run_in(tmp.path(), args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(a.record.is_object());
    }
    let first = std::fs::read(tmp.path().join("d.json")).unwrap();
    run_in(tmp.path(), cases[0]);
    assert_eq!(first, std::fs::read(tmp.path().join("d.json")).unwrap());
}

#[test]
fn thread_cap_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let args = ["decompose", "--f", F3, "--dirs", "1,0;0,1;1,1", "--grid", "513", "--out", "d.json"];
    let wide = run_in(tmp.path(), &args);
    let narrow = Command::new(env!("CARGO_BIN_EXE_ridge-split"))
        .args(args)
        .current_dir(tmp.path())
        .env("RIDGE_SPLIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(wide.stdout, String::from_utf8(narrow.stdout).unwrap());
}
