use std::path::Path;
use std::process::{Command, Output};

use qmcmc::experiments::ExperimentReport;

fn qmcmc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmcmc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_report(path: &Path) -> ExperimentReport {
    ExperimentReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_a_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--experiment",
        "lcu-qae",
        "--shots",
        "1000",
        "--seed",
        "7",
        "--out",
    ];
    for name in ["a.json", "b.json"] {
        let mut a = args.to_vec();
        a.push(name);
        let out = qmcmc(&a, dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = read_report(&dir.path().join("a.json"));
    let b = read_report(&dir.path().join("b.json"));
    assert_eq!(a, b);
    assert_eq!(a.total_counts(), 1000);
    let est = a.derived.mean_estimate_histogram.unwrap();
    assert_eq!(est.keys().collect::<Vec<_>>(), vec!["0.5"]);
}

#[test]
fn noisy_overlap_drops_below_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("noise.json"),
        r#"{"p1": 0.001, "p2": 0.02, "p_meas": 0.01, "attach": "native"}"#,
    )
    .unwrap();
    let out = qmcmc(
        &[
            "run",
            "--experiment",
            "dual-overlap",
            "--noise",
            "noise.json",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_report(&dir.path().join("r.json"));
    let overlap = r.derived.overlap_estimate.unwrap();
    assert!(overlap < 1.0 && overlap > 0.0, "overlap {overlap}");
}

#[test]
fn spectra_reports_expected_phases() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmcmc(&["spectra", "--delta", "0.25", "--encoding", "szegedy"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("max_error"), "{text}");
}

#[test]
fn csv_and_table_formats() {
    let dir = tempfile::tempdir().unwrap();
    let csv = qmcmc(
        &["run", "--experiment", "cswap-state-prep", "--format", "csv"],
        dir.path(),
    );
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("outcome,count,probability"));
    let table = qmcmc(
        &["run", "--experiment", "lcu-state-prep", "--format", "table"],
        dir.path(),
    );
    assert!(table.status.success());
    assert!(String::from_utf8(table.stdout).unwrap().contains("success"));
}

#[test]
fn compare_saved_report_against_device() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qmcmc(
        &["run", "--experiment", "lcu-state-prep", "--out", "r.json"],
        dir.path()
    )
    .status
    .success());
    let ok = qmcmc(
        &["compare", "--report", "r.json", "--assert", "--max-tvd", "0.05"],
        dir.path(),
    );
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let strict = qmcmc(
        &["compare", "--report", "r.json", "--assert", "--max-tvd", "0.0"],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        qmcmc(&["run", "--experiment", "bogus"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        qmcmc(&["run", "--experiment", "lcu-state-prep", "--delta", "1.5"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qmcmc(
            &["run", "--experiment", "lcu-state-prep", "--noise", "missing.json"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn transpile_report_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmcmc(&["transpile-report", "--experiment", "szegedy-state-prep"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("ZZPhase"));
    let list = qmcmc(&["list"], dir.path());
    assert!(list.status.success());
    assert!(String::from_utf8(list.stdout).unwrap().contains("dual-overlap"));
}
