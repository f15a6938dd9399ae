use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loxobound"))
        .args(args)
        .env_remove("LOXOBOUND_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn alpha_text_reports_the_constants() {
    let o = run(&["alpha", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("24.8692144087"), "{text}");
    assert!(text.contains("1.6068") && text.contains("1.5937"), "{text}");
}

#[test]
fn alpha_range_csv_has_one_row_per_rank() {
    let o = run(&["--format", "csv", "alpha", "--n-range", "2..10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n,c4,c3,c2,c1,c0,lo,hi,alpha,half_log_alpha,trace_bound"
    );
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("2,21,-496,-654,24,81,"));
    assert!(lines[9].starts_with("10,"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["alpha", "--n-range", "5..3"]).status.code(), Some(2));
    assert_eq!(run(&["alpha", "--n-range", "x"]).status.code(), Some(2));
    assert_eq!(run(&["alpha", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        run(&["optimize", "--n", "2", "--tol", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn help_exits_0() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("check-matrices"));
}

#[test]
fn verify_passes_and_injected_fault_fails() {
    let ok = run(&["--format", "json", "verify", "--n", "2"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let report: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(report["passed"], true);

    let bad = run(&["--format", "json", "verify", "--n", "2", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn optimize_passes_for_rank_2() {
    let o = run(&["--format", "csv", "optimize", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("check,expected,actual,passed"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")), "{text}");
}

#[test]
fn json_reports_are_reproducible() {
    let args = [
        "--format",
        "json",
        "optimize",
        "--n",
        "2",
        "--multistarts",
        "3",
        "--iterations",
        "2000",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("loxobound-cli-{}.json", std::process::id()));
    let o = run(&[
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
        "alpha",
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(report["config"]["command"], "alpha");
    assert_eq!(report["detail"][0]["n"], 3);
}

#[test]
fn check_matrices_samples() {
    let path = data("schottky_pair.json");
    let o = run(&[
        "--format",
        "json",
        "check-matrices",
        "--matrices",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], true);

    let path = data("commuting_pair.json");
    let o = run(&[
        "--format",
        "json",
        "check-matrices",
        "--matrices",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["warning"], true);

    let path = data("bad_det.json");
    assert_eq!(
        run(&["check-matrices", "--matrices", path.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["check-matrices", "--matrices", "/nonexistent/m.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_loxobound"))
        .args(["alpha", "--n", "2"])
        .env("LOXOBOUND_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_loxobound"))
        .args(["alpha", "--n", "2"])
        .env("LOXOBOUND_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
