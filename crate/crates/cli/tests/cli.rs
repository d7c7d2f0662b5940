use std::path::Path;
use std::process::{Command, Output};

use qcomb::catalog::helstrom_problem;
use qcomb::estimation::EstimationProblem;
use qcomb::io::{comb_to_file, problem_to_file, tester_to_file, write_json, SolutionFile};
use qcomb::network::{choi_of_channel, choi_of_unitary, comb_of_memoryless_sequence, comb_of_state, CombSpace, QuantumComb, Tester};
use qcomb::operator::{LabeledOperator, SystemLabel};
use qcomb::Complex;

fn qcomb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcomb")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn identity_comb() -> QuantumComb<f64> {
    let id = nalgebra::DMatrix::<Complex<f64>>::identity(2, 2);
    comb_of_memoryless_sequence(&[choi_of_unitary(&id, &SystemLabel::new("a", 2), &SystemLabel::new("b", 2)).unwrap()]).unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("id.json");
    let c = identity_comb();
    write_json(&good, &comb_to_file(&c)).unwrap();
    let o = qcomb(&["validate", path_str(&good)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("comb: valid"));

    let bad = dir.path().join("non_tp.json");
    let half = QuantumComb::new(c.space.clone(), &c.op.scale(0.5)).unwrap();
    write_json(&bad, &comb_to_file(&half)).unwrap();
    let o = qcomb(&["validate", path_str(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("level 1"), "{}", stdout(&o));

    let twice = dir.path().join("tester.json");
    let t = Tester::new(c.space.clone(), vec![("m".into(), LabeledOperator::identity(c.space.labels()).unwrap().scale(0.5))]).unwrap();
    let o_ok = dir.path().join("tester_ok.json");
    write_json(&o_ok, &tester_to_file(&t)).unwrap();
    assert_eq!(code(&qcomb(&["validate", path_str(&o_ok)])), 0);
    let t2 = Tester::new(c.space.clone(), vec![("m".into(), LabeledOperator::identity(c.space.labels()).unwrap().scale(2.0))]).unwrap();
    write_json(&twice, &tester_to_file(&t2)).unwrap();
    let o = qcomb(&["validate", path_str(&twice)]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("tester: invalid"));
}

#[test]
fn solve_and_dual_check() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("helstrom.json");
    write_json(&prob, &problem_to_file(&helstrom_problem::<f64>("q").unwrap())).unwrap();
    let sol = dir.path().join("solution.json");
    let o = qcomb(&["solve", path_str(&prob), "--out", path_str(&sol)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("gamma = 0.85355339"), "{}", stdout(&o));

    let o = qcomb(&["dual-check", path_str(&prob), path_str(&sol)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("certificate: passed"));

    let mut s: SolutionFile = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    s.lambda /= 2.0;
    let halved = dir.path().join("halved.json");
    write_json(&halved, &s).unwrap();
    let o = qcomb(&["dual-check", path_str(&prob), path_str(&halved)]);
    assert_eq!(code(&o), 7);
    assert!(stdout(&o).contains("certificate: failed"));
}

#[test]
fn single_label_problem_returns_its_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let rho = LabeledOperator::<f64>::identity(vec![SystemLabel::new("q", 2)]).unwrap().scale(0.5);
    let c = comb_of_state(&rho).unwrap();
    let p = EstimationProblem::from_combs(c.space.clone(), vec!["only".into()], vec![1.0], vec![c], nalgebra::DMatrix::from_element(1, 1, 0.4), 0.0).unwrap();
    let f = dir.path().join("one.json");
    write_json(&f, &problem_to_file(&p)).unwrap();
    let o = qcomb(&["solve", path_str(&f), "--out", "-", "--quiet"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["gamma"].as_f64().unwrap() - 0.4).abs() < 1e-7);
}

#[test]
fn oversized_problem_hits_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let (inp, out) = (SystemLabel::new("in", 5), SystemLabel::new("out", 13));
    // replacement channel onto |0⟩: Kraus |0⟩⟨i|
    let kraus: Vec<_> = (0..5)
        .map(|i| nalgebra::DMatrix::from_fn(13, 5, |r, c| Complex::new(if r == 0 && c == i { 1.0 } else { 0.0 }, 0.0)))
        .collect();
    let c = comb_of_memoryless_sequence(&[choi_of_channel(&kraus, &inp, &out, 1e-9).unwrap()]).unwrap();
    let sp: CombSpace = c.space.clone();
    let p = EstimationProblem::from_combs(sp, vec!["a".into(), "b".into()], vec![0.5, 0.5], vec![c.clone(), c], nalgebra::DMatrix::identity(2, 2), 0.0).unwrap();
    let f = dir.path().join("big.json");
    write_json(&f, &problem_to_file(&p)).unwrap();
    assert_eq!(code(&qcomb(&["solve", path_str(&f)])), 6);
}

#[test]
fn examples() {
    let o = qcomb(&["example", "two-phase", "--p", "0.7"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("gamma = 0.35000000") || stdout(&o).contains("gamma = 0.34999999"), "{}", stdout(&o));

    let o = qcomb(&["example", "phase", "--levels", "2"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("c_min (oracle) = 1.00000000"), "{text}");
    assert!(text.contains("c_min (printed formula) = 2.00000000"));
    assert!(text.contains("disagrees"));

    let o = qcomb(&["example", "product-rule", "--spec", "twin-helstrom", "--out", "-", "--quiet"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["relative_deviation"].as_f64().unwrap() <= 2e-6);
    assert_eq!(v["certified"], serde_json::Value::Bool(true));

    for name in ["helstrom", "ykl", "qmax", "sum-phases", "multicopy"] {
        assert_eq!(code(&qcomb(&["example", name])), 0, "{name}");
    }
}

#[test]
fn error_exit_codes() {
    assert_eq!(code(&qcomb(&["example", "nope"])), 8);
    assert_eq!(code(&qcomb(&["example", "product-rule", "--spec", "nope"])), 8);
    assert_eq!(code(&qcomb(&["solve"])), 64);
    assert_eq!(code(&qcomb(&["frobnicate"])), 64);
    assert_eq!(code(&qcomb(&["solve", "/nonexistent/problem.json"])), 3);
    assert_eq!(code(&qcomb(&["example", "helstrom", "--max-iter", "2"])), 4);
    assert_eq!(code(&qcomb(&["example", "helstrom", "--tol", "-1"])), 64);
    assert_eq!(code(&qcomb(&["example", "two-phase", "--p", "1.5"])), 2);
    assert_eq!(code(&qcomb(&["--help"])), 0);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("p.json");
    write_json(&prob, &problem_to_file(&helstrom_problem::<f64>("q").unwrap())).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(code(&qcomb(&["solve", path_str(&prob), "--out", path_str(&a), "--quiet"])), 0);
    assert_eq!(code(&qcomb(&["solve", path_str(&prob), "--out", path_str(&b), "--quiet"])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn product_rule_on_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    write_json(&a, &problem_to_file(&helstrom_problem::<f64>("a").unwrap())).unwrap();
    write_json(&b, &problem_to_file(&helstrom_problem::<f64>("b").unwrap())).unwrap();
    let o = qcomb(&["product-rule", path_str(&a), path_str(&b)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("certified = true"));
}
