use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lptype_cli::report::{round_significant, Status};
use lptype_cli::Report;
use lptype_core::Solution;
use tempfile::TempDir;

fn lptype(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lptype"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report_of(out: &Output) -> Report {
    Report::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("report parses")
}

fn lattice(n: usize, d: usize, seed: u64) -> String {
    let mut z = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut s = String::new();
    for _ in 0..n {
        s.push('+');
        for _ in 0..d {
            z ^= z << 13;
            z ^= z >> 7;
            z ^= z << 17;
            s += &format!(" {}", (z % 201) as i64 - 100);
        }
        s.push('\n');
    }
    s
}

#[test]
fn two_point_ball_within_oracle_bound() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "two.txt", "# two points\n+ 0 0\n+ 10 0\n");
    let out = lptype(&[
        "--problem",
        "meb",
        "--model",
        "multipass",
        "--eps",
        "0.1",
        "--verify",
        "--input",
        f.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report_of(&out);
    let Solution::Ball { radius, .. } = r.solution else {
        panic!()
    };
    assert!((5.0..=1.4 * 1.4 * 5.0).contains(&radius));
    let oracle = r.oracle.unwrap();
    assert_eq!(oracle.oracle_value, Some(5.0));
    assert!((r.oracle_ratio.unwrap() - radius / 5.0).abs() < 1e-9);
    assert_eq!(r.passes, Some(1 + 2 * r.iterations));
}

#[test]
fn missing_file_exits_one() {
    let out = lptype(&["--problem", "meb", "--input", "/nonexistent/points.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/points.txt"));
}

#[test]
fn inseparable_svm_exits_two() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "xor.txt",
        "+ 0.5 0.5 | 1\n+ -0.5 -0.5 | 1\n+ 0.5 -0.5 | -1\n+ -0.5 0.5 | -1\n",
    );
    let out = lptype(&[
        "--problem",
        "svm",
        "--gamma",
        "0.2",
        "--input",
        f.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r = report_of(&out);
    assert_eq!(r.status, Status::Infeasible);
    assert_eq!(r.solution, Solution::Infeasible);
}

#[test]
fn malformed_line_reports_its_number() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "bad.txt", "+ 1 2\n+ 3 4\n+ 5 x\n");
    let out = lptype(&["--problem", "meb", "--input", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.txt:3:"), "{err}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "pts.txt", &lattice(300, 2, 4));
    let args = [
        "--problem",
        "meb",
        "--seed",
        "11",
        "--eps",
        "0.05",
        "--input",
        f.to_str().unwrap(),
    ];
    let a = lptype(&args);
    let b = lptype(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = report_of(&a);
    assert_eq!(r.config.seed, 11);
}

#[test]
fn report_round_trips() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "pts.txt", &lattice(200, 3, 9));
    let rp = dir.path().join("report.json");
    let out = lptype(&[
        "--problem",
        "meb",
        "--model",
        "coordinator",
        "--machines",
        "3",
        "--verify",
        "--input",
        f.to_str().unwrap(),
        "--report",
        rp.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("rounds"));
    let text = std::fs::read_to_string(&rp).unwrap();
    let r = Report::from_json(&text).unwrap();
    assert_eq!(r.to_json(), text);
    let load = r.load.as_ref().unwrap();
    assert_eq!(load.endpoints, 4);
    assert_eq!(r.rounds, Some(load.rounds.len()));
    assert_eq!(r.rounds, Some(2 + 3 * r.iterations));
    assert!(r.oracle_ratio.is_some());

    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(&keys[..4], &["schema", "config", "status", "solution"]);
}

#[test]
fn floats_keep_twelve_digits() {
    assert_eq!(round_significant(1.0 / 3.0), 0.333333333333);
    assert_eq!(round_significant(2.0), 2.0);
    assert_eq!(round_significant(123456.7890123456), 123456.789012);
}

#[test]
fn verify_refuses_large_instances() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "d5.txt", &lattice(20, 5, 1));
    let out = lptype(&[
        "--problem",
        "meb",
        "--verify",
        "--input",
        f.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verify"));
    let g = write(dir.path(), "big.txt", &lattice(2001, 2, 1));
    let out = lptype(&[
        "--problem",
        "meb",
        "--verify",
        "--input",
        g.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn s_range_is_enforced() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "sep.txt", "+ 0.5 0.5 | 1\n+ -0.5 -0.5 | -1\n");
    let path = f.to_str().unwrap();
    for s in ["0.5", "1000"] {
        let out = lptype(&[
            "--problem",
            "svm",
            "--gamma",
            "0.2",
            "--s",
            s,
            "--input",
            path,
        ]);
        assert_eq!(out.status.code(), Some(1), "s = {s}");
    }
    let out = lptype(&[
        "--problem",
        "svm",
        "--gamma",
        "0.2",
        "--s",
        "2",
        "--input",
        path,
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(lptype(&["--problem", "nope"]).status.code(), Some(1));
    assert_eq!(lptype(&["--input", "x"]).status.code(), Some(1));
    assert_eq!(
        lptype(&["--problem", "svm", "--input", "x"]).status.code(),
        Some(1)
    );
}

#[test]
fn turnstile_matches_live_points() {
    let dir = TempDir::new().unwrap();
    let live = lattice(100, 2, 3);
    let extra = lattice(40, 2, 8);
    let churn = format!("{live}{extra}{}", extra.replace('+', "-"));
    let a = write(dir.path(), "live.txt", &live);
    let b = write(dir.path(), "churn.txt", &churn);
    let run = |p: &Path| {
        lptype(&[
            "--problem",
            "meb",
            "--model",
            "turnstile",
            "--coord-bound",
            "100",
            "--verify",
            "--input",
            p.to_str().unwrap(),
        ])
    };
    let (ra, rb) = (run(&a), run(&b));
    assert_eq!(
        rb.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&rb.stderr)
    );
    let (ra, rb) = (report_of(&ra), report_of(&rb));
    assert_eq!(ra.solution, rb.solution);
    assert_eq!(rb.oracle.unwrap().live_items, 100);
    assert!(rb.setup_passes.unwrap() >= 2);
}

#[test]
fn scenario_with_partitions() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p0.txt", &lattice(50, 2, 1));
    write(dir.path(), "p1.txt", &lattice(50, 2, 2));
    let sc = write(
        dir.path(),
        "run.toml",
        "problem = \"meb\"\nmodel = \"parallel\"\neps = 0.1\nseed = 5\npartitions = [\"p0.txt\", \"p1.txt\"]\n",
    );
    let out = lptype(&["--scenario", sc.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report_of(&out);
    assert_eq!(r.config.machines, 2);
    assert_eq!(r.config.seed, 5);
    assert!(!r.load.unwrap().has_coordinator);

    let out = lptype(&["--scenario", sc.to_str().unwrap(), "--seed", "6"]);
    assert_eq!(report_of(&out).config.seed, 6);
    let bad = write(dir.path(), "bad.toml", "problem = \"meb\"\nflavour = 1\n");
    assert_eq!(
        lptype(&["--scenario", bad.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn lp_classify_and_sdp_run() {
    let dir = TempDir::new().unwrap();
    let lp = write(
        dir.path(),
        "lp.txt",
        "@objective 0.6 0.8\n+ 1 0 0.5\n+ 0 1 0.5\n+ -1 -1 1\n",
    );
    let out = lptype(&[
        "--problem",
        "lp",
        "--eps",
        "0.1",
        "--verify",
        "--input",
        lp.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report_of(&out);
    let check = r.oracle.unwrap();
    assert!((check.oracle_value.unwrap() - 0.7).abs() < 1e-9);
    assert!(check.oracle_gap.unwrap() >= -0.5);

    let cl = write(
        dir.path(),
        "cl.txt",
        "+ 0.8 0.6 | 1\n+ 0.9 -0.2 | 1\n+ -0.7 0.1 | -1\n+ -0.6 -0.9 | -1\n",
    );
    let out = lptype(&[
        "--problem",
        "classify",
        "--eps",
        "0.1",
        "--input",
        cl.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let sdp = write(
        dir.path(),
        "sdp.txt",
        "@dim 2\n@objective 0.6 0 0 0.8\n@sparsity 2\n@frobenius 2\n+ 1 0 0 1 | 0.7\n+ 1 0 1 0.5 | 0.3\n",
    );
    let out = lptype(&[
        "--problem",
        "sdp",
        "--eps",
        "0.1",
        "--verify",
        "--input",
        sdp.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report_of(&out);
    assert!(r.oracle.unwrap().oracle_gap.unwrap().abs() <= 0.5);

    let no_dir = write(dir.path(), "nodim.txt", "+ 1 0 0 1 | 0.7\n");
    let out = lptype(&["--problem", "sdp", "--input", no_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
