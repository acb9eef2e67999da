use std::path::Path;
use std::process::{Command, Output};

use coreg::experiments::parse_csv;
use coreg_cli::{parse_report, RunConfig};

fn coreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

const SMALL: [&str; 6] = ["--n", "64", "--m", "48", "--sparsity", "4"];

fn with_small<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(SMALL.iter()).chain(tail.iter()).copied().collect()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(coreg(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(coreg(dir.path(), &["sweep", "--help"]).status.code(), Some(0));
    assert_eq!(coreg(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = coreg(dir.path(), &["solve", "--n", "64"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--model"));
    assert_eq!(coreg(dir.path(), &["solve", "--model", "lasso"]).status.code(), Some(1));
    assert_eq!(coreg(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(coreg(dir.path(), &["certify", "--n", "many"]).status.code(), Some(1));
    assert_eq!(coreg(dir.path(), &["certify", "--n", "48"]).status.code(), Some(1));
    assert_eq!(
        coreg(dir.path(), &["sweep", "--model", "relaxed", "--deltas", "1e-3,1e-2"]).status.code(),
        Some(1)
    );
}

#[test]
fn solve_writes_outputs_and_accepts_zero_noise() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["solve", "--model", "strict", "--delta", "0", "--out", "res"], &[]);
    let o = coreg(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(value(&out, "converged"), Some("true"));
    let err_h: f64 = value(&out, "err_h").unwrap().parse().unwrap();
    assert!(err_h < 1e-4, "err_h = {err_h}");
    for f in ["x.txt", "h.txt", "wx.txt", "diagnostics.txt"] {
        assert!(dir.path().join("res").join(f).exists(), "{f}");
    }
    let h = std::fs::read_to_string(dir.path().join("res/h.txt")).unwrap();
    assert!(h.contains("# model=strict"));
    let values = h.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(values, 64);
}

#[test]
fn solve_trace_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["solve", "--model", "relaxed", "--delta", "1e-2", "--trace", "t.csv"], &[]);
    assert_eq!(coreg(dir.path(), &args).status.code(), Some(0));
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.lines().count() > 2);
}

#[test]
fn solve_reports_non_convergence_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["solve", "--model", "relaxed", "--max-iters", "3"], &[]);
    let o = coreg(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(value(&stdout(&o), "converged"), Some("false"));
}

#[test]
fn certify_identity_case_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let o = coreg(
        dir.path(),
        &["certify", "--n", "64", "--m", "64", "--sparsity", "4", "--w", "identity", "--a", "identity"],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(value(&out, "valid"), Some("true"));
    assert_eq!(value(&out, "inj.injective"), Some("true"));
    let a_inv: f64 = value(&out, "const.a_inv_norm").unwrap().parse().unwrap();
    assert!((a_inv - 1.0).abs() < 1e-9);
}

#[test]
fn certify_fails_when_sparsity_exceeds_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let o = coreg(dir.path(), &["certify", "--n", "64", "--m", "4", "--sparsity", "8"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert_eq!(value(&out, "valid"), Some("false"));
    assert_eq!(value(&out, "inj.injective"), Some("false"));
    assert!(value(&out, "const.c").is_none());
}

#[test]
fn certify_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["certify", "--model", "strict", "--report", "r.txt"], &[]);
    let o = coreg(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let file = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert_eq!(file, stdout(&o));
    let pairs = parse_report(&file).unwrap();
    let c: f64 = pairs.iter().find(|(k, _)| k == "const.c").unwrap().1.parse().unwrap();
    let norm: f64 = pairs.iter().find(|(k, _)| k == "const.norm").unwrap().1.parse().unwrap();
    // c = (1 + C‖ν‖)²/(2C) with C = 1.
    assert!((c - (1.0 + norm).powi(2) / 2.0).abs() <= 1e-12 * c);
    assert!(parse_report("no equals sign").is_err());
}

#[test]
fn sweep_is_deterministic_and_slope_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let tail = ["--trials", "1", "--deltas", "1e-2,1e-3,1e-4", "--bounds"];
    let a = coreg(dir.path(), &with_small(&["sweep", "--model", "relaxed", "--csv", "a.csv"], &tail));
    let b = coreg(
        dir.path(),
        &with_small(&["sweep", "--model", "relaxed", "--csv", "b.csv", "--jobs", "2"], &tail),
    );
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    let (oa, ob) = (stdout(&a), stdout(&b));
    assert_eq!(value(&oa, "hash"), value(&ob, "hash"));
    let ca = std::fs::read(dir.path().join("a.csv")).unwrap();
    let cb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ca, cb);

    let parsed = parse_csv(std::str::from_utf8(&ca).unwrap()).unwrap();
    assert_eq!(parsed.records.len(), 3);
    assert_eq!(value(&oa, "slope"), parsed.get("fit_slope"));
    assert!(parsed.records.iter().all(|r| r.pass_c == Some(true) && r.pass_d == Some(true)));
    assert!(dir.path().join("a.svg").exists());
    assert!(dir.path().join("a.timing.csv").exists());
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# comment\nmodel=strict\nn=32\nkappa=2.0\n").unwrap();
    let o = coreg(dir.path(), &["solve", "--config", "run.cfg", "--n", "64", "--print-config"]);
    assert_eq!(o.status.code(), Some(0));
    let cfg = RunConfig::from_canonical(&stdout(&o)).unwrap();
    assert_eq!(cfg.n, 64);
    assert_eq!(cfg.kappa, 2.0);
    assert_eq!(cfg.model.map(|m| m.to_string()).as_deref(), Some("strict"));
}

#[test]
fn oracle_agrees_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = coreg(
        dir.path(),
        &["oracle", "--model", "strict", "--n", "16", "--m", "12", "--sparsity", "2", "--delta", "1e-3"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(value(&stdout(&o), "pass"), Some("true"));
}
