use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ftcons(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftcons"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn list_and_show_describe_the_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = ftcons(&["list"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let listing = text(&out.stdout);
    for name in ftcons::scenario::BUILTIN_NAMES {
        assert!(listing.contains(name), "{name} missing from\n{listing}");
    }

    let out = ftcons(&["show", "ex3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let sc = ftcons::scenario::parse_scenario(&text(&out.stdout)).unwrap();
    assert_eq!(sc, ftcons::scenario::builtin("ex3").unwrap());
}

#[test]
fn run_writes_csv_and_report_and_warnings_do_not_fail() {
    let dir = tempfile::tempdir().unwrap();
    let shown = ftcons(&["show", "ex2-lowrho"], dir.path());
    fs::write(dir.path().join("low.json"), &shown.stdout).unwrap();

    let out = ftcons(
        &["run", "low.json", "--out", "res", "--dt", "1e-4", "--t-end", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("warning"));
    let report = fs::read_to_string(dir.path().join("res/ex2-lowrho.report.txt")).unwrap();
    assert!(report.contains("condition_satisfied=false"), "{report}");
    assert!(!report.contains("consensus_time=none"), "{report}");

    let csv = fs::read_to_string(dir.path().join("res/ex2-lowrho.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,x3,x4,x5,x6,u1,"));
    assert_eq!(csv.lines().count(), 10_002);

    let out = ftcons(&["report", "res/ex2-lowrho.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary = text(&out.stdout);
    let line = |key: &str, body: &str| body.lines().find(|l| l.starts_with(key)).map(str::to_owned);
    assert_eq!(line("consensus_time=", &summary), line("consensus_time=", &report));
}

#[test]
fn reproduce_is_byte_for_byte_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["reproduce", "ex4", "--out", out, "--dt", "1e-4", "--t-end", "0.5"];
    assert_eq!(ftcons(&args("a"), dir.path()).status.code(), Some(0));
    assert_eq!(ftcons(&args("b"), dir.path()).status.code(), Some(0));
    let a = fs::read(dir.path().join("a/ex4.csv")).unwrap();
    let b = fs::read(dir.path().join("b/ex4.csv")).unwrap();
    assert_eq!(a, b);
    let header = text(&a).lines().next().unwrap().split(',').count();
    assert_eq!(header, 33);
}

#[test]
fn bound_prints_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = ftcons(
        &["bound", "--variant", "fixed-time", "--lambda", "2", "--rho", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains(&format!("bound={}", std::f64::consts::PI / 7f64.sqrt())));

    let out = ftcons(
        &["bound", "--variant", "average", "--lambda", "2", "--rho", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"name": "bad", "graph": {"n": 2, "edges": [[0, 1, 1.0]]},
            "protocol": {"variant": "average", "lambda": "two", "rho": 1.0}, "x0": [0, 1]}"#,
    )
    .unwrap();
    let out = ftcons(&["run", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("protocol.lambda"), "{}", text(&out.stderr));

    assert_eq!(ftcons(&["run", "missing.json"], dir.path()).status.code(), Some(1));
    assert_eq!(ftcons(&["reproduce", "ex9"], dir.path()).status.code(), Some(1));
    assert_eq!(ftcons(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn exact_inverse_of_a_zero_aggregate_aborts_with_two() {
    // the middle agent of a symmetric path sees a zero aggregate while its
    // gain grows from the outer disagreement
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sing.json"),
        r#"{"name": "sing", "graph": {"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]},
            "protocol": {"variant": "fixed_time", "lambda": 2.0, "rho": 2.0, "gamma": 0.0},
            "x0": [0.0, 1.0, 2.0], "integrator": {"dt": 0.01, "t_end": 0.1}}"#,
    )
    .unwrap();
    let out = ftcons(&["run", "sing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("agent 1"), "{}", text(&out.stderr));
}
