use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lloyd_adversary::io::{read_instance_file, read_trace_file};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lloyd-adversary"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_run_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let g = bin(&["generate", "--gadgets", "4", "-o", "c4.json"], dir.path());
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    assert!(
        stdout(&g).contains("points: 22, centers: 7"),
        "{}",
        stdout(&g)
    );

    let r = bin(&["run", "c4.json"], dir.path());
    assert!(r.status.success());
    assert!(
        stdout(&r).contains("iterations: 54, converged: true"),
        "{}",
        stdout(&r)
    );
    assert!(stdout(&r).contains("ties: 0, empty clusters: 0"));
    let trace = dir.path().join("c4.trace.csv");
    assert_eq!(read_trace_file(&trace).unwrap().len(), 55);

    let v = bin(
        &["verify", "c4.json", "c4.trace.csv", "--strict"],
        dir.path(),
    );
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    assert!(stdout(&v).contains("leaf wake count: 14"), "{}", stdout(&v));
    assert!(stdout(&v).contains("complete"));
}

#[test]
fn truncated_trace_verifies_as_prefix() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["generate", "--gadgets", "5", "-o", "c.json"], dir.path());
    let r = bin(
        &["run", "c.json", "--max-iters", "40", "--trace", "t.csv"],
        dir.path(),
    );
    assert!(r.status.success());
    assert!(stdout(&r).contains("converged: false"), "{}", stdout(&r));
    let v = bin(&["verify", "c.json", "t.csv"], dir.path());
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    assert!(
        stdout(&v).contains("incomplete: verified prefix of 41 rows"),
        "{}",
        stdout(&v)
    );
}

#[test]
fn tampered_trace_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["generate", "--gadgets", "3", "-o", "c.json"], dir.path());
    bin(&["run", "c.json", "--trace", "t.csv"], dir.path());
    let path = dir.path().join("t.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // swap two consecutive data rows
    lines.swap(4, 5);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let v = bin(&["verify", "c.json", "t.csv"], dir.path());
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn malformed_instance_exits_with_format_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"format_version\": 1").unwrap();
    let r = bin(&["run", "bad.json"], dir.path());
    assert_eq!(r.status.code(), Some(2));
    let missing = bin(&["run", "nope.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = bin(
        &[
            "generate",
            "--gadgets",
            "3",
            "--delta",
            "1.5",
            "-o",
            "x.json",
        ],
        dir.path(),
    );
    assert_eq!(g.status.code(), Some(1));
    let e = bin(
        &[
            "generate",
            "--gadgets",
            "3",
            "--epsilon",
            "0.5",
            "-o",
            "x.json",
        ],
        dir.path(),
    );
    assert_eq!(e.status.code(), Some(1));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn datapoint_variant_and_extended_precision() {
    let dir = tempfile::tempdir().unwrap();
    let g = bin(
        &[
            "generate",
            "--gadgets",
            "3",
            "--variant",
            "datapoints",
            "--precision",
            "extended",
            "-o",
            "d.json",
        ],
        dir.path(),
    );
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    assert!(
        stdout(&g).contains("points: 19, centers: 7"),
        "{}",
        stdout(&g)
    );
    let r = bin(&["run", "d.json", "--precision", "extended"], dir.path());
    assert!(
        stdout(&r).contains("iterations: 23, converged: true"),
        "{}",
        stdout(&r)
    );
}

#[test]
fn expand_then_run_matches_weighted() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["generate", "--gadgets", "2", "-o", "w.json"], dir.path());
    let e = bin(&["expand", "w.json", "-o", "u.json"], dir.path());
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let expanded = read_instance_file(&dir.path().join("u.json")).unwrap();
    assert!(expanded.points.iter().all(|p| p.weight == 1));
    let r = bin(&["run", "u.json", "--no-trace"], dir.path());
    assert!(
        stdout(&r).contains("iterations: 6, converged: true"),
        "{}",
        stdout(&r)
    );

    let bad = bin(
        &["expand", "w.json", "--spacing", "0.1", "-o", "v.json"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_writes_csv_and_honours_guard() {
    let dir = tempfile::tempdir().unwrap();
    let s = bin(
        &["sweep", "--max-t", "6", "--guard", "4", "-o", "s.csv"],
        dir.path(),
    );
    assert!(s.status.success());
    assert!(stdout(&s).contains("warning: max-t 6 exceeds the guard 4"));
    let mut rdr = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    let iters: Vec<u64> = rdr
        .records()
        .map(|r| r.unwrap()[3].parse().unwrap())
        .collect();
    assert_eq!(iters, [6, 22, 54]);
}
