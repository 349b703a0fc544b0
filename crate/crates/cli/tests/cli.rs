use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use illume_core::certify::verify_certificate_json;
use illume_core::directions::parse_directions;
use illume_core::randomized::trial_success_prob;
use illume_core::rational::{qr, to_f64};
use tempfile::TempDir;

fn illume(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_illume")).args(args).output().expect("binary runs")
}

fn body_file(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cube_is_certified_by_eight_corners() {
    let dir = TempDir::new().unwrap();
    let body = body_file(dir.path(), "cube3.json", r#"{"n": 3, "family": "cube"}"#);
    let o = illume(&["illuminate", "--body", s(&body)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("directions,8\n"));
    assert!(out.contains("status,certified\n"));
}

#[test]
fn t2_leaves_four_vertices_of_the_octahedron() {
    let dir = TempDir::new().unwrap();
    let body = body_file(dir.path(), "ell1_3.json", r#"{"n": 3, "family": "ell1"}"#);
    let o = illume(&["illuminate", "--body", s(&body), "--directions", "T2"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    for u in ["\"1,0,0\"", "\"-1,0,0\"", "\"0,1,0\"", "\"0,-1,0\""] {
        assert!(out.contains(&format!("uncovered,{u}\n")), "{out}");
    }
    assert_eq!(out.matches("uncovered,").count(), 4);
}

#[test]
fn adaptive_run_is_reproducible_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let body = body_file(dir.path(), "ell1_6.json", r#"{"n": 6, "family": "ell1"}"#);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let cert = dir.path().join(format!("cert{run}.json"));
        let dirs = dir.path().join(format!("dirs{run}.txt"));
        let o = illume(&[
            "illuminate",
            "--body",
            s(&body),
            "--seed",
            "42",
            "--mode",
            "adaptive",
            "--out",
            s(&cert),
            "--directions-out",
            s(&dirs),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let count: usize = stdout(&o).lines().find_map(|l| l.strip_prefix("directions,")).unwrap().parse().unwrap();
        assert!(count < 64);
        let cert_text = fs::read_to_string(&cert).unwrap();
        let dirs_text = fs::read_to_string(&dirs).unwrap();
        assert!(verify_certificate_json(&cert_text).unwrap().is_certified());
        assert_eq!(parse_directions(&dirs_text, 6).unwrap().len(), count);
        outputs.push((stdout(&o), cert_text, dirs_text));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn explicit_directions_file() {
    let dir = TempDir::new().unwrap();
    let body = body_file(dir.path(), "cap.json", r#"{"n": 3, "family": "cube_cap_l1", "r": 2}"#);
    let dirs = dir.path().join("t1.txt");
    let o = illume(&["illuminate", "--body", s(&body), "--directions", "T1", "--directions-out", s(&dirs)]);
    assert_eq!(o.status.code(), Some(0));
    let o = illume(&["illuminate", "--body", s(&body), "--directions", s(&dirs), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["directions"], 7);
    assert_eq!(v["points"], 12);
}

#[test]
fn audits_pass_and_bad_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let topk = body_file(dir.path(), "topk2_3.json", r#"{"n": 3, "family": "topk", "k": 2}"#);
    let o = illume(&["audit", "--body", s(&topk), "--samples", "100000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("check,samples,violations\n"));
    assert!(out.lines().skip(1).all(|l| l.ends_with(",0")), "{out}");

    let cube = body_file(dir.path(), "cube3.json", r#"{"n": 3, "family": "cube"}"#);
    assert_eq!(illume(&["audit", "--body", s(&cube)]).status.code(), Some(0));

    let lp = body_file(dir.path(), "lp.json", r#"{"n": 4, "family": "lp", "p": "3/2"}"#);
    assert_eq!(illume(&["audit", "--body", s(&lp), "--samples", "2000"]).status.code(), Some(0));

    let bad = body_file(dir.path(), "bad.json", r#"{"n": 3, "family": "#);
    assert_eq!(illume(&["audit", "--body", s(&bad)]).status.code(), Some(2));
    let unsorted = body_file(dir.path(), "w.json", r#"{"n": 2, "family": "dual_orbit", "weights": [[1, 2]]}"#);
    assert_eq!(illume(&["illuminate", "--body", s(&unsorted)]).status.code(), Some(2));
    assert_eq!(illume(&["illuminate", "--body", s(&cube), "--unknown-flag"]).status.code(), Some(2));
    assert_eq!(illume(&["illuminate", "--body", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn vertex_cap_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let body = body_file(dir.path(), "c9.json", r#"{"n": 9, "family": "cube"}"#);
    let o = illume(&["illuminate", "--body", s(&body)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("9 > 8"));
}

#[test]
fn simulate_tables() {
    let o = illume(&["simulate", "--n", "12", "--k", "2", "--trials", "100000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    // 2^-2 * C(10,1) / C(12,3)
    assert_eq!(trial_success_prob(12, 2).unwrap(), qr(1, 88));
    assert_eq!(row[2], "1/88");
    assert_eq!(row[8], "true");
    assert!((row[3].parse::<f64>().unwrap() - to_f64(&qr(1, 88))).abs() < 1e-15);
    assert_eq!(out, stdout(&illume(&["simulate", "--n", "12", "--k", "2", "--trials", "100000", "--seed", "1"])));

    let o = illume(&["simulate", "--chain", "--n-max", "128"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), (2..=128usize).map(|n| n.div_ceil(2)).sum::<usize>());
    assert!(rows.iter().all(|r| r.ends_with(",true")));

    let o = illume(&["simulate", "--threshold", "--n-max", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("n0,"), "{last}");
    assert_eq!(illume(&["simulate", "--threshold", "--n-max", "20000"]).status.code(), Some(2));
}

#[test]
fn small_queries() {
    let dir = TempDir::new().unwrap();
    let body = body_file(dir.path(), "topk.json", r#"{"n": 3, "family": "topk", "k": 2}"#);
    let o = illume(&["norm", "--body", s(&body), "--point", "1,-1/2,1/3"]);
    assert_eq!(stdout(&o), "point,norm\n\"1,-1/2,1/3\",3/2\n");
    let o = illume(&["distance", "--body", s(&body)]);
    assert_eq!(stdout(&o), "n,distance,cube\n3,2,false\n");
    let o = illume(&["vertices", "--body", s(&body)]);
    assert_eq!(stdout(&o).lines().count(), 15);
    let cube = body_file(dir.path(), "cube2.json", r#"{"n": 2, "family": "cube"}"#);
    let o = illume(&["min-ill", "--body", s(&cube)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("size,4\n"));
}
