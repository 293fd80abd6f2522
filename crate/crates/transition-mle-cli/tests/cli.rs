//! End-to-end tests of the command-line surface and its exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_transition-mle"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn fixtures_list_shows_all_studies() {
    let out = run(&["fixtures", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["study2", "study3", "study4", "study5", "study6", "study7", "study8"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn mle_fixture_prints_interval_estimate() {
    let out = run(&["mle", "--fixture", "study2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let first: Vec<f64> = text
        .lines()
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    for (got, expect) in first.iter().zip([0.721, 0.202, 0.067, 0.010]) {
        assert!((got - expect).abs() < 5.5e-4);
    }
}

#[test]
fn mle_from_files_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    let mask = dir.path().join("mask.csv");
    std::fs::write(&counts, "4494,1257,417,61\n0,1734,1214,36\n0,0,6724,2240\n0,0,0,0\n").unwrap();
    std::fs::write(&mask, "free,free,free\n0,free,free\n0,0,free\nabsorbing\n").unwrap();
    let from_files = run(&["mle", "--counts", counts.to_str().unwrap(), "--mask", mask.to_str().unwrap()]);
    assert!(from_files.status.success());
    let from_fixture = run(&["mle", "--fixture", "study2"]);
    assert_eq!(stdout(&from_files), stdout(&from_fixture));
}

#[test]
fn root_study2_reports_eight_roots_none_stochastic() {
    let out = run(&["root", "--fixture", "study2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("candidates: 8"), "{text}");
    assert!(text.contains("classification: real roots exist but none stochastic"));
}

#[test]
fn root_study3_reports_no_real_roots() {
    let out = run(&["root", "--fixture", "study3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("no real roots"), "{text}");
    assert!(text.contains("-0.005"), "{text}");
}

#[test]
fn root_identity_counts_finds_stochastic_root() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    std::fs::write(&counts, "10,0\n0,10\n").unwrap();
    let out = run(&["root", "--counts", counts.to_str().unwrap(), "--cycles", "7"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("classification: stochastic root found"));
}

#[test]
fn simulate_identity_gives_diagonal_counts() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("p.csv");
    std::fs::write(&matrix, "1,0\n0,1\n").unwrap();
    let out = run(&[
        "simulate",
        "--matrix",
        matrix.to_str().unwrap(),
        "--cycles",
        "3",
        "--row-totals",
        "5,5",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "5,0\n0,5\n");
}

#[test]
fn grid_search_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("toy.records");
    let out = run(&[
        "grid-search",
        "--fixture",
        "study6",
        "--cycles",
        "2",
        "--grid-denominators",
        "4,4,4",
        "--workers",
        "2",
        "--store",
        store.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("grid points:       27"));

    let figs = dir.path().join("figs");
    let out = run(&[
        "analyze",
        "--store",
        store.to_str().unwrap(),
        "--top-fraction",
        "0.5",
        "--emit",
        "rank-curve,fig4",
        "--out",
        figs.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(figs.join("rank-curve.csv").exists());
    assert!(figs.join("fig4.csv").exists());

    // resume on the completed store is a no-op that re-emits the report
    let out = run(&[
        "grid-search",
        "--fixture",
        "study6",
        "--cycles",
        "2",
        "--grid-denominators",
        "4,4,4",
        "--workers",
        "2",
        "--store",
        store.to_str().unwrap(),
        "--resume",
    ]);
    assert!(out.status.success());

    // altered tolerances refuse to resume (computational error)
    let out = run(&[
        "grid-search",
        "--fixture",
        "study6",
        "--cycles",
        "2",
        "--grid-denominators",
        "4,4,4",
        "--workers",
        "2",
        "--store",
        store.to_str().unwrap(),
        "--resume",
        "--inner-abs-tol",
        "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
}

#[test]
fn settings_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("toy.records");
    let settings = dir.path().join("settings.txt");
    std::fs::write(&settings, "inner_abs_tol = 1e-6\ninner_rel_tol = 1e-6\n").unwrap();
    let out = run(&[
        "grid-search",
        "--fixture",
        "study6",
        "--grid-denominators",
        "4,4,4",
        "--workers",
        "1",
        "--store",
        store.to_str().unwrap(),
        "--settings",
        settings.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("toy.records.manifest")).unwrap();
    assert!(manifest.contains("inner_abs_tol = 0.000001"), "{manifest}");
}

#[test]
fn usage_errors_exit_two() {
    // missing required --store
    let out = run(&["grid-search", "--fixture", "study4"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown fixture
    let out = run(&["mle", "--fixture", "study99"]);
    assert_eq!(out.status.code(), Some(2));

    // no input source at all
    let out = run(&["mle"]);
    assert_eq!(out.status.code(), Some(2));

    // --counts without --cycles on a command that needs it
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("c.csv");
    std::fs::write(&counts, "1,1\n1,1\n").unwrap();
    let out = run(&["root", "--counts", counts.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn computational_errors_exit_one() {
    // unreadable counts file
    let out = run(&["mle", "--counts", "/nonexistent/counts.csv"]);
    assert_eq!(out.status.code(), Some(1));

    // malformed counts content
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("bad.csv");
    std::fs::write(&counts, "1,garbage\n2,3\n").unwrap();
    let out = run(&["mle", "--counts", counts.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // missing store for analyze
    let out = run(&["analyze", "--store", Path::new("/nonexistent/x.records").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
