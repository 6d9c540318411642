//! Black-box tests of the installed binary: exit codes, byte-identical
//! reports across runs and thread counts, the frozen CSV header, format
//! and destination flags, and the auxiliary subcommands.

use std::fs;
use std::process::{Command, Output};

const HEADER: &str = "scenario_id,p,q,epsilon,A_eps,B1_eps,B2_eps,A_PS,muckenhoupt,mazya_rosin,C_hat,witness_lb,residual_b1b2,grid_n";

const BASE_CONFIG: &str = "\
[scenario.pair]
p = 2
q = 1
a = 0
b = 1
v = power 1 0
w = power 1 0

[scenario.sup]
p = 2
q = 2
a = 0
b = 1
v = power 1 0
w = piecewise 0.5 1,2

[grid]
n = 96

[epsilons]
values = 0.5, 1

[estimator]
max_iters = 300
restarts = 2
seed = 9
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardy-gauge"))
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
    let path = dir.path().join("run.ini");
    fs::write(&path, text).unwrap();
    path
}

fn run_analyze(cfg: &std::path::Path, envs: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.arg("analyze").arg("--config").arg(cfg);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn csv_is_deterministic_and_has_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let one = run_analyze(&cfg, &[]);
    let two = run_analyze(&cfg, &[]);
    assert!(one.status.success(), "stderr: {}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout, "two identical runs diverged");
    let text = String::from_utf8(one.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    // rows sorted by (scenario_id, epsilon): pair before sup
    let ids: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, vec!["pair", "pair", "sup", "sup"]);
}

#[test]
fn determinism_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let free = run_analyze(&cfg, &[]);
    let single = run_analyze(&cfg, &[("HARDY_GAUGE_THREADS", "1")]);
    let duo = run_analyze(&cfg, &[("HARDY_GAUGE_THREADS", "2")]);
    assert_eq!(free.status.code(), Some(0));
    assert_eq!(single.status.code(), Some(0));
    assert_eq!(free.stdout, single.stdout);
    assert_eq!(free.stdout, duo.stdout);
}

#[test]
fn config_error_exits_2_with_line_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &BASE_CONFIG.replace("[estimator]", "[estimator]\nwarp = 9"));
    let out = run_analyze(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("config error at line"), "stderr: {err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unreadable_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_analyze(&dir.path().join("absent.ini"), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn runtime_failure_emits_rows_and_exits_3() {
    // tabulated weight covering only (0.5, 1): pointwise sampling below
    // its first node fails at run time, after parsing has succeeded
    let text = BASE_CONFIG.replace(
        "[scenario.pair]\np = 2\nq = 1\na = 0\nb = 1\nv = power 1 0",
        "[scenario.pair]\np = 2\nq = 1\na = 0\nb = 1\nv = tabulated 0.5,0.75 1,1",
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &text);
    let out = run_analyze(&cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    let body = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 5, "rows still emitted for every scenario x epsilon");
    let failed_row = lines.iter().find(|l| l.starts_with("pair,")).unwrap();
    assert!(failed_row.contains(",nan,"), "failed cell marked: {failed_row}");
    // the unaffected scenario still succeeds
    let good_row = lines.iter().find(|l| l.starts_with("sup,")).unwrap();
    assert!(!good_row.contains("nan"), "clean scenario intact: {good_row}");
}

#[test]
fn divergent_profile_reports_inf_and_exits_0() {
    // v(t) = t with p = 2 on (0, 1): the profile integral diverges at the
    // left endpoint, conditions carry the inf sentinel, and that is not a
    // failure
    let text = "\
[scenario.sentinel]
p = 2
q = 2
a = 0
b = 1
v = power 1 1
w = power 1 0

[grid]
n = 96

[epsilons]
values = 1

[estimator]
max_iters = 200
restarts = 1
";
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, text);
    let out = run_analyze(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = String::from_utf8(out.stdout).unwrap();
    let row = body.lines().nth(1).unwrap();
    assert!(row.contains(",inf,"), "sentinel serialized as inf: {row}");
    assert!(!row.contains("nan"));
}

#[test]
fn format_flag_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let dest = dir.path().join("report.jsonl");
    let out = bin()
        .arg("analyze")
        .arg("--config")
        .arg(&cfg)
        .arg("--format")
        .arg("jsonl")
        .arg("--out")
        .arg(&dest)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "report went to the file, not stdout");
    let body = fs::read_to_string(&dest).unwrap();
    for line in body.lines() {
        assert!(line.starts_with('{') && line.ends_with('}'));
        assert!(line.contains("\"scenario_id\":"));
    }
    assert_eq!(body.lines().count(), 4);
}

#[test]
fn bad_format_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let out = bin()
        .arg("analyze")
        .arg("--config")
        .arg(&cfg)
        .arg("--format")
        .arg("yaml")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_out_path_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let out = bin()
        .arg("analyze")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("no/such/dir/report.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_eps_builds_geometric_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let out = bin()
        .arg("sweep-eps")
        .arg("--config")
        .arg(&cfg)
        .args(["--eps-min", "0.5", "--eps-max", "2", "--eps-steps", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let body = String::from_utf8(out.stdout).unwrap();
    let eps: Vec<&str> = body
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("pair,"))
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(eps, vec!["0.5", "1", "2"]);
}

#[test]
fn sweep_eps_rejects_bad_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let out = bin()
        .arg("sweep-eps")
        .arg("--config")
        .arg(&cfg)
        .args(["--eps-min", "2", "--eps-max", "0.5", "--eps-steps", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_prints_summary_with_root_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let out = bin()
        .arg("estimate")
        .arg("--config")
        .arg(&cfg)
        .args(["--scenario", "pair"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let body = String::from_utf8(out.stdout).unwrap();
    assert!(body.contains("best-constant estimate:"), "{body}");
    assert!(body.contains("(raw)"), "{body}");
    assert!(body.contains("(1/r root)"), "{body}");
}

#[test]
fn estimate_unknown_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, BASE_CONFIG);
    let out = bin()
        .arg("estimate")
        .arg("--config")
        .arg(&cfg)
        .args(["--scenario", "ghost"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
