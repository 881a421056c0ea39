use std::fs;
use std::process::{Command, Output};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/tvb-7-8-4.txt");

fn tvb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvb")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_writes_one_row_per_point() {
    let o = tvb(&["simulate", "--code", FIXTURE, "--block", "10", "--pi", "0.01", "--pi", "0.02", "--frames", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# tool: tvb"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("p_i,p_d,p_s,seed,frames"));
    assert!(rows[1].starts_with("1e-2,1e-2,0e0,1,20,"));
}

#[test]
fn noiseless_point_has_no_errors() {
    let o = tvb(&["simulate", "--code", FIXTURE, "--block", "8", "--pi", "0", "--frames", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = data_lines(&text)[1].split(',').collect();
    assert_eq!(row[6], "0");
    assert_eq!(row[8], "0");
}

#[test]
fn stream_mode_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let fid = dir.path().join("fid.csv");
    let out = dir.path().join("res.csv");
    let o = tvb(&[
        "stream",
        "--code",
        FIXTURE,
        "--block",
        "10",
        "--pi",
        "0.005",
        "--frames",
        "12",
        "--stream-frames",
        "4",
        "--lookahead",
        "3",
        "--baseline",
        "--out",
        out.to_str().unwrap(),
        "--fidelity",
        fid.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let res = fs::read_to_string(&out).unwrap();
    assert!(res.contains("# lookahead: 3"));
    let header = data_lines(&res)[0];
    assert!(header.contains("fidelity") && header.contains("frame_mode_fer"));
    let fid = fs::read_to_string(&fid).unwrap();
    assert_eq!(data_lines(&fid).len(), 1 + 4);
}

#[test]
fn missing_or_malformed_code_is_a_config_error() {
    let o = tvb(&["simulate", "--code", "/nonexistent/code.txt", "--block", "5", "--pi", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "3 2 1\n000\n01\n").unwrap();
    let o = tvb(&["simulate", "--code", bad.to_str().unwrap(), "--block", "5", "--pi", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let o = tvb(&["simulate", "--code", FIXTURE, "--pi", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failure_threshold_sets_exit_status() {
    // A huge miss budget leaves windows too narrow for most frames.
    let o = tvb(&[
        "simulate",
        "--code",
        FIXTURE,
        "--block",
        "20",
        "--pi",
        "0.1",
        "--frames",
        "20",
        "--pe",
        "0.9",
        "--max-failure-rate",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn schedule_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("s.txt");
    fs::write(&sched, "0 1 2 3 3 2\n").unwrap();
    let o = tvb(&["simulate", "--code", FIXTURE, "--schedule", sched.to_str().unwrap(), "--pi", "0.01", "--frames", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# schedule: 0 1 2 3 3 2"));
    assert!(stdout(&o).contains("# n q M N: 7 8 4 6"));
}

#[test]
fn driftpdf_rows_sum_close_to_one() {
    let o = tvb(&["driftpdf", "--bits", "50", "--pi", "0.02", "--pe", "1e-12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let total: f64 = data_lines(&text)[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-11);
}

#[test]
fn audit_reports_every_scope() {
    let o = tvb(&["audit-limits", "--n", "7", "--block", "20", "--pi", "0.001", "--pi", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 1 + 6);
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")));
}

#[test]
fn design_then_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("code.txt");
    let o = tvb(&["design", "--n", "5", "--q", "4", "--books", "3", "--steps", "3000", "--out", code.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&code).unwrap();
    assert!(text.starts_with("5 4 3\n"));
    let o = tvb(&["spectrum", "--code", code.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("# books: 3"));
    // Each book contributes distances summing to C(4, 2) pairs.
    let mut per_book = [0usize; 3];
    for row in &data_lines(&s)[1..] {
        let f: Vec<usize> = row.split(',').map(|v| v.parse().unwrap()).collect();
        per_book[f[0]] += f[2];
    }
    assert_eq!(per_book, [6, 6, 6]);
}

#[test]
fn reference_spectrum_reports_distance_three() {
    let o = tvb(&["spectrum", "--code", FIXTURE]);
    assert!(stdout(&o).contains("# d_lmin: 3 3 3 3"));
}

#[test]
fn marker_designs_match_their_construction() {
    let o = tvb(&["design", "--kind", "marker", "--n", "7", "--markers", "0011,1100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("7 8 2\n0000011\n"));
    let o = tvb(&["design", "--kind", "sparse-marker", "--n", "7", "--q", "8", "--books", "5", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("7 8 "));
}
