//! Black-box tests of the command-line binary: flag validation, exit codes,
//! report formats, and run-to-run reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn ttrand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttrand"))
        .env("TT_SKETCH_THREADS", "1")
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("process should exit normally")
}

/// Write a small reference tensor and return its path.
fn small_tensor(dir: &Path) -> String {
    let path = dir.join("t.dnt").to_str().unwrap().to_string();
    let out = ttrand(&[
        "gen",
        "--family",
        "tt-noise",
        "--dims",
        "6,6,6,6",
        "--core-ranks",
        "2,3,2",
        "--gamma",
        "1e-3",
        "--seed",
        "3",
        "--out",
        &path,
    ]);
    assert_eq!(code(&out), 0, "gen failed: {}", stderr(&out));
    path
}

const HEADER: &str =
    "method,sketch,rank_spec,eps,R,q,b,seed,trial,tt_ranks,re,fit,wall_ms,estimator,clamped";

#[test]
fn gen_is_deterministic_and_reports_the_norm() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.dnt");
    let b = dir.path().join("b.dnt");
    for path in [&a, &b] {
        let out = ttrand(&[
            "gen",
            "--family",
            "func-sin",
            "--extent",
            "5",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).contains("fro norm"));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "repeated gen runs must be byte-identical"
    );
}

#[test]
fn decompose_emits_the_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let out = ttrand(&[
        "decompose", "--in", &tensor, "--method", "tt-svd", "--eps", "1e-3", "--verify",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let row = lines.next().expect("one data row");
    assert_eq!(lines.next(), None);
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 15);
    assert_eq!(fields[0], "tt-svd");
    assert_eq!(fields[1], "", "deterministic method leaves sketch empty");
    assert_eq!(fields[3], "1e-3");
    let re: f64 = fields[10].parse().expect("re should be numeric");
    let fit: f64 = fields[11].parse().expect("fit should be numeric");
    assert!((re + fit - 1.0).abs() <= 1e-9);
}

#[test]
fn decompose_writes_a_train_the_tool_can_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let tt = dir.path().join("out.ttc");
    let out = ttrand(&[
        "decompose",
        "--in",
        &tensor,
        "--method",
        "tt-svd-rank",
        "--ranks",
        "2,3,2",
        "--out",
        tt.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let train = ttrand::tt_read(&tt).unwrap();
    assert_eq!(train.dims(), vec![6, 6, 6, 6]);
    assert_eq!(train.ranks(), vec![2, 3, 2]);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        // missing required value
        vec!["gen", "--family", "tt-noise", "--core-ranks", "2", "--out", "x"],
        // unknown method
        vec!["decompose", "--in", &tensor, "--method", "qr-magic", "--eps", "1e-2"],
        // eps on a rank method
        vec!["decompose", "--in", &tensor, "--method", "rand", "--ranks", "2,2,2", "--eps", "1e-2"],
        // gram sketching needs at least one power round
        vec!["decompose", "--in", &tensor, "--method", "rand-gram", "--ranks", "2,2,2", "--power", "0"],
        // gram sketching is a dense-gaussian construction
        vec!["decompose", "--in", &tensor, "--method", "rand-gram", "--ranks", "2,2,2", "--sketch", "sdct"],
        // greedy reports ranks only; there is no train to write
        vec!["decompose", "--in", &tensor, "--method", "greedy", "--eps", "1e-2", "--out", "x.ttc"],
        // eps outside (0, 1)
        vec!["decompose", "--in", &tensor, "--method", "tt-svd", "--eps", "3"],
        // bench needs exactly one sweep axis
        vec!["bench", "--in", &tensor, "--methods", "tt-svd", "--trials", "1"],
        vec![
            "bench", "--in", &tensor, "--methods", "rand", "--trials", "1",
            "--ranks-sweep", "2", "--eps-sweep", "1e-2",
        ],
        // power suffix on a method that takes none
        vec![
            "bench", "--in", &tensor, "--methods", "tt-svd@1", "--trials", "1",
            "--eps-sweep", "1e-2",
        ],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = ttrand(&args);
        assert_eq!(code(&out), 2, "args {args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty(), "args {args:?} should explain the error");
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let out = ttrand(&[
        "decompose", "--in", "/nonexistent/t.dnt", "--method", "tt-svd", "--eps", "1e-2",
    ]);
    assert_eq!(code(&out), 1);
    assert!(!stderr(&out).is_empty());
}

#[test]
fn help_exits_clean() {
    for args in [&["help"][..], &["--help"][..]] {
        let out = ttrand(args);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).contains("gen"));
        assert!(stdout(&out).contains("decompose"));
        assert!(stdout(&out).contains("bench"));
    }
}

#[test]
fn bench_rank_sweep_emits_points_times_methods_times_trials() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let out = ttrand(&[
        "bench",
        "--in",
        &tensor,
        "--ranks-sweep",
        "1,2,3",
        "--methods",
        "tt-svd-rank,rand@1",
        "--sketch",
        "kr-gaussian",
        "--trials",
        "2",
        "--seed",
        "11",
        "--verify",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 1 + 3 * 2 * 2);
    // every row parses, carries the swept uniform rank, and the trial column
    // cycles within each point/method block
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 15);
        assert!(["tt-svd-rank", "rand"].contains(&fields[0]));
        assert!(["1-1-1", "2-2-2", "3-3-3"].contains(&fields[2]));
        let _: f64 = fields[10].parse().expect("re should be filled under --verify");
    }
}

#[test]
fn bench_eps_sweep_range_syntax_expands() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let out = ttrand(&[
        "bench",
        "--in",
        &tensor,
        "--eps-sweep",
        "1e-1,1e-2,1e-3",
        "--methods",
        "tt-svd,greedy",
        "--trials",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    // greedy rows report estimated ranks with empty re/fit (no train exists)
    let greedy_row = text
        .lines()
        .find(|l| l.starts_with("greedy,"))
        .expect("a greedy row");
    let fields: Vec<&str> = greedy_row.split(',').collect();
    assert!(!fields[9].is_empty(), "tt_ranks column should be filled");
    assert_eq!(fields[10], "");
    assert_eq!(fields[11], "");
}

#[test]
fn bench_snr_sweep_generates_its_own_tensors() {
    let out = ttrand(&[
        "bench",
        "--snr-sweep",
        "10,40",
        "--dims",
        "6,6,6",
        "--core-ranks",
        "2,2",
        "--gen-seed",
        "4",
        "--methods",
        "rand",
        "--ranks",
        "2,2",
        "--trials",
        "2",
        "--verify",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    let notes = stderr(&out);
    assert!(notes.contains("snr_db=10"));
    assert!(notes.contains("snr_db=40"));
    // higher signal-to-noise must leave less to miss at the fixed true rank
    let re_at = |idx: usize| -> f64 {
        let row = text.lines().nth(idx).unwrap();
        row.split(',').nth(10).unwrap().parse().unwrap()
    };
    let low = (re_at(1) + re_at(2)) / 2.0;
    let high = (re_at(3) + re_at(4)) / 2.0;
    assert!(high < low, "40 dB error {high} should be below 10 dB error {low}");
}

#[test]
fn bench_snr_sweep_rejects_an_input_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let out = ttrand(&[
        "bench", "--in", &tensor, "--snr-sweep", "10", "--dims", "6,6,6",
        "--core-ranks", "2,2", "--methods", "tt-svd", "--trials", "1",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_repeats_identically_except_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let run = || {
        let out = ttrand(&[
            "bench",
            "--in",
            &tensor,
            "--ranks-sweep",
            "2",
            "--methods",
            "rand",
            "--sketch",
            "spemb",
            "--trials",
            "3",
            "--seed",
            "9",
            "--verify",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        stdout(&out)
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[12] = "-";
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn bench_parallel_trials_match_serial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let run = |parallel: bool| {
        let mut args = vec![
            "bench",
            "--in",
            &tensor,
            "--eps-sweep",
            "1e-2",
            "--methods",
            "adaptive",
            "--trials",
            "4",
            "--seed",
            "2",
            "--verify",
        ];
        if parallel {
            args.push("--parallel-trials");
        }
        let out = ttrand(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        stdout(&out)
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[12] = "-";
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(false), run(true));
}

#[test]
fn bench_aggregate_reduces_trials_to_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let out = ttrand(&[
        "bench",
        "--in",
        &tensor,
        "--ranks-sweep",
        "2,3",
        "--methods",
        "rand",
        "--trials",
        "5",
        "--seed",
        "1",
        "--aggregate",
        "--verify",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "method,sketch,rank_spec,eps,R,q,b,trials,re_mean,re_std,wall_ms_mean,wall_ms_std,clamped_any"
    );
    assert_eq!(lines.len(), 1 + 2);
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[7], "5");
        let std: f64 = fields[9].parse().unwrap();
        assert!(std >= 0.0);
    }
}

#[test]
fn verify_budget_skips_error_computation_above_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let out = ttrand(&[
        "decompose",
        "--in",
        &tensor,
        "--method",
        "tt-svd",
        "--eps",
        "1e-2",
        "--verify",
        "--verify-budget",
        "10",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[10], "", "re must stay empty above the budget");
    assert_eq!(fields[11], "", "fit must stay empty above the budget");
    assert!(stderr(&out).contains("budget"), "skip should be explained");
}

#[test]
fn reports_can_be_written_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = small_tensor(dir.path());
    let report = dir.path().join("rows.csv");
    let out = ttrand(&[
        "decompose",
        "--in",
        &tensor,
        "--method",
        "greedy",
        "--eps",
        "1e-2",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).is_empty(), "report file should capture the rows");
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    assert_eq!(text.lines().count(), 2);
}
