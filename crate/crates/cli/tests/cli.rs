use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use doubleform_cli::CurvatureFile;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doubleform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn report(out: &Output) -> BTreeMap<String, String> {
    stdout(out)
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key=value line");
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn value(report: &BTreeMap<String, String>, key: &str) -> f64 {
    report
        .get(key)
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

fn generated(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = run(&[&["generate"], args].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let path = dir.path().join(name);
    fs::write(&path, out.stdout).unwrap();
    path
}

fn written(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn classify_constant_curvature() {
    let dir = TempDir::new().unwrap();
    let path = generated(&dir, "c.json", &["constant", "--n", "4", "--kappa", "1"]);
    let out = run(&["classify", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["pq.1.1.holds"], "true");
    assert!((value(&r, "pq.1.1.lambda") - 3.0).abs() < 1e-12);
    assert!((value(&r, "h.2") - 6.0).abs() < 1e-12);
    assert!((value(&r, "h.4") - 6.0).abs() < 1e-12);
}

#[test]
fn classify_ricci_flat() {
    let dir = TempDir::new().unwrap();
    let path = generated(&dir, "rf.json", &["ricci-flat-4d", "--c", "1", "1", "-2"]);
    let r = report(&run(&["classify", s(&path)]));
    assert_eq!(r["pq.1.1.holds"], "true");
    assert_eq!(value(&r, "pq.1.1.lambda"), 0.0);
    assert!(value(&r, "thorpe.1.star_residual") < 1e-12);
    assert!(value(&r, "thorpe.1.contraction_residual") < 1e-12);
}

#[test]
fn report_field_order_is_stable() {
    let dir = TempDir::new().unwrap();
    let path = generated(&dir, "r.json", &["random", "--n", "6", "--seed", "3"]);
    let keys: Vec<String> = stdout(&run(&["classify", s(&path)]))
        .lines()
        .map(|l| l.split('=').next().unwrap().to_string())
        .collect();
    assert_eq!(&keys[..4], ["n", "tol", "degenerate", "pq.1.1.holds"]);
    for k in [
        "h.2",
        "h.4",
        "h.6",
        "hyper.2",
        "einstein.4",
        "thorpe.1.star_residual",
        "sectional.3.constant",
    ] {
        assert!(keys.iter().any(|x| x == k), "missing {k}");
    }
    assert_eq!(
        stdout(&run(&["classify", s(&path)])),
        stdout(&run(&["classify", s(&path)]))
    );
}

#[test]
fn malformed_index_names_the_entry() {
    let dir = TempDir::new().unwrap();
    let path = written(
        &dir,
        "bad.json",
        r#"{"n": 4, "entries": [{"i": [0, 1], "j": [0, 1], "v": 1}, {"i": [1, 1], "j": [0, 2], "v": 1}]}"#,
    );
    let out = run(&["classify", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("entry 1 (i=[1, 1]"), "{}", stderr(&out));
}

#[test]
fn loader_rejects_bad_files() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            "range",
            r#"{"n": 3, "entries": [{"i": [0, 3], "j": [0, 1], "v": 1}]}"#,
            1,
        ),
        ("json", r#"{"n": 3, "entries": ["#, 1),
        ("field", r#"{"n": 3, "entries": [], "extra": 1}"#, 1),
        (
            "contradiction",
            r#"{"n": 3, "entries": [{"i": [0, 1], "j": [0, 2], "v": 1}, {"i": [0, 2], "j": [0, 1], "v": 2}]}"#,
            1,
        ),
        (
            "bianchi",
            r#"{"n": 4, "entries": [{"i": [0, 1], "j": [2, 3], "v": 1}]}"#,
            2,
        ),
    ];
    for (name, text, code) in cases {
        let path = written(&dir, name, text);
        assert_eq!(run(&["classify", s(&path)]).status.code(), Some(code), "{name}");
    }
    let path = written(
        &dir,
        "repeat",
        r#"{"n": 3, "entries": [{"i": [0, 1], "j": [0, 2], "v": 1}, {"i": [0, 2], "j": [0, 1], "v": 1}]}"#,
    );
    assert_eq!(run(&["classify", s(&path)]).status.code(), Some(0));
    let path = dir.path().join("bianchi");
    assert_eq!(
        run(&["classify", s(&path), "--no-bianchi-check"]).status.code(),
        Some(0)
    );
    assert_eq!(run(&["classify", "/nonexistent/file.json"]).status.code(), Some(1));
}

#[test]
fn generate_examples() {
    let out = run(&["generate", "constant", "--n", "4", "--kappa", "1"]);
    let file = CurvatureFile::parse(&stdout(&out)).unwrap();
    assert_eq!(file.n, 4);
    assert_eq!(file.entries.len(), 6);
    assert!(file.entries.iter().all(|e| e.i == e.j && e.v == 1.0));

    let file = CurvatureFile::parse(&stdout(&run(&["generate", "ricci-flat-4d", "--c", "1", "1", "-2"]))).unwrap();
    assert_eq!(file.entries.len(), 6);

    let a = run(&["generate", "random", "--n", "4", "--seed", "7"]);
    let b = run(&["generate", "random", "--n", "4", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, run(&["generate", "random", "--n", "4", "--seed", "8"]).stdout);

    assert_eq!(run(&["generate", "hyperbolic"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "non-einstein-3d", "--n", "5"]).status.code(), Some(1));
}

#[test]
fn generated_files_round_trip_exactly() {
    for args in [
        vec!["random", "--n", "5", "--seed", "11"],
        vec![
            "constant",
            "--n",
            "6",
            "--kappa",
            "-0.3",
            "--perturb",
            "0.01",
            "--seed",
            "2",
        ],
        vec!["non-einstein-3d"],
    ] {
        let text = stdout(&run(&[&["generate"][..], &args].concat()));
        let r = CurvatureFile::parse(&text).unwrap().load(true).unwrap();
        assert_eq!(CurvatureFile::from_curvature(&r).render(), text, "{args:?}");
    }
}

#[test]
fn decompose_examples() {
    let dir = TempDir::new().unwrap();
    let c = generated(&dir, "c.json", &["constant", "--n", "4", "--kappa", "1"]);
    let r = report(&run(&["decompose", s(&c), "--q", "1"]));
    assert!(value(&r, "norm.2") < 1e-12);
    assert!(value(&r, "norm.1") < 1e-12);
    assert!((value(&r, "norm.0") - 0.5).abs() < 1e-12);
    assert_eq!(r["divisible.2"], "true");

    let ne = generated(&dir, "ne.json", &["non-einstein-3d"]);
    let r = report(&run(&["decompose", s(&ne), "--q", "1"]));
    assert!(value(&r, "norm.1") > 0.1);

    let r = report(&run(&["decompose", s(&c), "--q", "3"]));
    assert_eq!(r["degenerate"], "true");
    assert!(r.iter().filter(|(k, _)| k.starts_with("norm.")).all(|(_, v)| v == "0"));
}

#[test]
fn solve_perturbed_constant_curvature() {
    let dir = TempDir::new().unwrap();
    let input = generated(
        &dir,
        "p.json",
        &["constant", "--n", "4", "--perturb", "1e-3", "--seed", "5"],
    );
    let output = dir.path().join("out.json");
    let out = run(&[
        "solve",
        s(&input),
        "--condition",
        "pq-einstein",
        "--p",
        "1",
        "--q",
        "1",
        "--output",
        s(&output),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert!(value(&r, "residual") <= 1e-6);
    let iterations: usize = r["iterations"].parse().unwrap();
    let trace: Vec<f64> = (0..=iterations).map(|i| value(&r, &format!("trace.{i}"))).collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    let solved = fs::read_to_string(&output).unwrap();
    let classified = report(&run(&["classify", s(&output), "--tol", "1e-5"]));
    assert_eq!(classified["pq.1.1.holds"], "true", "{solved}");
}

#[test]
fn solve_without_iterations_echoes_input() {
    let dir = TempDir::new().unwrap();
    let input = generated(
        &dir,
        "p.json",
        &["random", "--n", "5", "--perturb", "1e-3", "--seed", "4"],
    );
    let output = dir.path().join("out.json");
    let out = run(&[
        "solve",
        s(&input),
        "--condition",
        "pq-einstein",
        "--p",
        "1",
        "--q",
        "2",
        "--max-iterations",
        "0",
        "--output",
        s(&output),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["iterations"], "0");
    assert!(value(&r, "residual") > 0.0);
    assert_eq!(fs::read(&input).unwrap(), fs::read(&output).unwrap());
}

#[test]
fn solve_rejects_infeasible_flags() {
    let dir = TempDir::new().unwrap();
    let input = generated(&dir, "c.json", &["constant", "--n", "5"]);
    let output = dir.path().join("out.json");
    for extra in [
        &["--condition", "pq-einstein", "--p", "2", "--q", "1"][..],
        &["--condition", "pq-einstein", "--q", "1"][..],
        &["--condition", "pq-einstein", "--p", "1", "--q", "3"][..],
        &["--condition", "thorpe", "--q", "1", "--step", "0"][..],
    ] {
        let out = run(&[&["solve", s(&input), "--output", s(&output)][..], extra].concat());
        assert_eq!(out.status.code(), Some(1), "{extra:?}: {}", stderr(&out));
    }
    assert!(!output.exists());
}
