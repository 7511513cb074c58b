//! End-to-end runs of the `admm` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use admm_core::cli::{ReferenceJson, SolveReportJson, TRACE_COLUMNS};
use admm_core::problem::{p1, p2};
use admm_core::{DenseMatrix, PolyhedralSet, QuadraticFunction, SplitProblem, Vector};

fn admm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admm")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_problem(dir: &Path, name: &str, prob: &SplitProblem) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, prob.to_json_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve_into(problem: &Path, out: &Path, extra: &[&str]) -> (i32, SolveReportJson) {
    let mut args = vec!["solve", s(problem), "--out", s(out)];
    args.extend_from_slice(extra);
    let run = admm(&args);
    let report = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    (code(&run), report)
}

#[test]
fn scalar_instances_reach_their_optima() {
    let dir = tempfile::tempdir().unwrap();
    for (name, prob, p_star) in [("p1.json", p1(), 0.5), ("p2.json", p2(), 1.0)] {
        let path = write_problem(dir.path(), name, &prob);
        let (code, report) = solve_into(&path, &dir.path().join(name.replace(".json", "")), &["--reference", "oracle"]);
        assert_eq!(code, 0, "{name}");
        assert!((report.final_iterate.p - p_star).abs() <= 1e-6, "{name}: p = {}", report.final_iterate.p);
        assert!(report.comparison.unwrap().p_error <= 1e-6);
    }
}

#[test]
fn oracle_prints_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    for (name, prob, x, lambda) in [("p1.json", p1(), 1.5, -1.0), ("p2.json", p2(), 1.0, -2.0)] {
        let path = write_problem(dir.path(), name, &prob);
        let run = admm(&["oracle", s(&path)]);
        assert_eq!(code(&run), 0);
        let reference: ReferenceJson = serde_json::from_str(&stdout(&run)).unwrap();
        assert!((reference.x_star[0] - x).abs() <= 1e-9, "{name}");
        assert!((reference.y_star[0] - x).abs() <= 1e-9, "{name}");
        assert!((reference.lambda_star[0] - lambda).abs() <= 1e-9, "{name}");
    }
}

#[test]
fn infeasible_subproblem_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut prob = p1();
    // x ≤ 0 and -x ≤ -1
    prob.x_set = PolyhedralSet::halfspaces(DenseMatrix::from_row_slice(2, 1, &[1.0, -1.0]), Vector::from_row_slice(&[0.0, -1.0]))
        .unwrap();
    let path = write_problem(dir.path(), "empty.json", &prob);
    let (code, report) = solve_into(&path, &dir.path().join("out"), &[]);
    assert_eq!(code, 1);
    assert!(report.failure.is_some());
}

#[test]
fn oracle_over_capacity_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let n = 21;
    let mut prob = p1();
    prob.f = QuadraticFunction::weighted_distance(&vec![1.0; n], &vec![0.0; n]);
    prob.a = DenseMatrix::from_element(1, n, 1.0);
    prob.x_set = PolyhedralSet::boxed(&vec![-1.0; n], &vec![1.0; n]).unwrap();
    let path = write_problem(dir.path(), "big.json", &prob);
    assert_eq!(code(&admm(&["oracle", s(&path)])), 3);
    let run = admm(&["solve", s(&path), "--reference", "oracle", "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&run), 3);
}

#[test]
fn generation_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&admm(&["gen", "random-qp", "--seed", "42", "--out", s(&a)])), 0);
    assert_eq!(code(&admm(&["gen", "random-qp", "--seed", "42", "--out", s(&b)])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(code(&admm(&["gen", "random-qp", "--seed", "43", "--out", s(&b)])), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    for seed in 0..100 {
        let path = dir.path().join(format!("g{seed}.json"));
        assert_eq!(code(&admm(&["gen", "random-qp", "--seed", &seed.to_string(), "--out", s(&path)])), 0);
        let run = admm(&["validate", s(&path)]);
        assert_eq!(code(&run), 0, "seed {seed}: {}", stdout(&run));
    }
}

#[test]
fn consensus_stacks_negative_identities() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("consensus.json");
    let run = admm(&["gen", "consensus", "--agents", "3", "--dim", "2", "--boxed", "--seed", "5", "--out", s(&path)]);
    assert_eq!(code(&run), 0);
    let prob = SplitProblem::from_json_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let identity = DenseMatrix::identity(2, 2);
    assert_eq!(prob.b.nrows(), 6);
    for agent in 0..3 {
        assert_eq!(prob.b.rows(2 * agent, 2).into_owned(), -&identity);
    }
    assert_eq!(code(&admm(&["validate", s(&path)])), 0);
}

#[test]
fn nonconvex_objective_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut prob = p1();
    prob.f = QuadraticFunction::new(DenseMatrix::from_element(1, 1, -1.0), Vector::zeros(1), 0.0).unwrap();
    let path = write_problem(dir.path(), "concave.json", &prob);
    let run = admm(&["validate", s(&path)]);
    assert_eq!(code(&run), 1);
    assert!(stdout(&run).contains("assumption 1: FAIL"), "{}", stdout(&run));
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = p1().to_json_string();
    let path = dir.path().join("cut.json");
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    for cmd in ["validate", "oracle"] {
        assert_eq!(code(&admm(&[cmd, s(&path)])), 2, "{cmd}");
    }
    assert_eq!(code(&admm(&["solve", s(&path), "--out", s(&dir.path().join("out"))])), 2);
    assert_eq!(code(&admm(&["validate", s(&dir.path().join("missing.json"))])), 2);
}

#[test]
fn trace_matches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qp.json");
    assert_eq!(code(&admm(&["gen", "random-qp", "--seed", "7", "--out", s(&path)])), 0);
    let out = dir.path().join("run");
    let (code, report) = solve_into(&path, &out, &["--certificates", "full", "--reference", "oracle"]);
    assert_eq!(code, 0);

    let mut reader = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), report.iterations);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
        for col in 5..8 {
            if !row[col].is_empty() {
                let slack: f64 = row[col].parse().unwrap();
                assert!(slack >= -1e-8, "row {i} {}: {slack}", TRACE_COLUMNS[col]);
            }
        }
    }
}
