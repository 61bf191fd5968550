use std::fs;
use std::path::Path;
use std::process::Command;

use nullcurv::cli::{self, parse_config, Mode, FAILED_MARKER, MANIFEST};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nullcurv"))
}

fn pairs(kv: &[(&str, &str)]) -> Vec<(String, String)> {
    kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn flags_override_file_entries() {
    let file = "mode = solve\nres = 32\n# comment\nmax-iters = 10\n";
    let cfg = parse_config(&pairs(&[("res", "16")]), Some(file)).unwrap();
    assert_eq!(cfg.mode, Mode::Solve);
    assert_eq!(cfg.res, 16);
    assert_eq!(cfg.max_iters, 10);
}

#[test]
fn unknown_and_missing_keys_are_errors() {
    let err = parse_config(&pairs(&[("mode", "solve"), ("rez", "16")]), None).unwrap_err();
    assert!(err.to_string().contains("rez"));
    assert!(parse_config(&[], None).is_err());
    assert!(parse_config(&pairs(&[("mode", "solve"), ("res", "7")]), None).is_err());
    assert!(parse_config(&pairs(&[("mode", "solve"), ("q", "6.5")]), None).is_err());
    assert!(parse_config(&pairs(&[("mode", "continue"), ("schedule", "4,3")]), None).is_err());
}

#[test]
fn echoed_config_parses_back_to_itself() {
    let cfg = parse_config(
        &pairs(&[("mode", "continue"), ("res", "8"), ("schedule", "3,4,5"), ("seed", "9")]),
        None,
    )
    .unwrap();
    let again = parse_config(&[], Some(&cfg.echo())).unwrap();
    assert_eq!(again.echo(), cfg.echo());
}

#[test]
fn solve_writes_snapshot_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["solve", "--dim", "3", "--res", "8", "--preset", "cosgap:0.1", "--q", "4", "--probes", "4"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let snap = nullcurv::snapshot::read_file(dir.path().join("u.pscf")).unwrap();
    assert_eq!(snap.grid().res(), 8);
    let (h, rows) = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(rows.len(), 1);
    let lam = column(&h, &rows, "lambda")[0];
    assert!(lam > 0.0);
    assert!((column(&h, &rows, "constraint")[0] - 1.0).abs() < 1e-9);
    let manifest = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
    assert!(manifest.contains("u.pscf") && manifest.contains("summary.csv"));
    assert!(!dir.path().join(FAILED_MARKER).exists());
}

#[test]
fn csv_reals_round_trip_exactly() {
    for v in [0.1, 1.0 / 3.0, 5.477904089531332, -2.5e-300, f64::MAX] {
        assert_eq!(cli::fmt_real(v).parse::<f64>().unwrap(), v);
    }
    assert_eq!(cli::fmt_real(f64::NAN), "NaN");
}

#[test]
fn continue_records_an_increasing_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["continue", "--res", "8", "--preset", "cosgap:0.1", "--schedule", "3,4,5"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let (h, rows) = read_csv(&dir.path().join("trace.csv"));
    let q = column(&h, &rows, "q");
    assert_eq!(q, vec![3.0, 4.0, 5.0]);
    let lam = column(&h, &rows, "lambda");
    assert!(lam.windows(2).all(|w| w[1] < w[0]));
    for k in 0..3 {
        assert!(dir.path().join(format!("u_{k:03}.pscf")).exists());
    }
    let (_, blow) = read_csv(&dir.path().join("blowup.csv"));
    assert_eq!(blow.len(), 3);

    let report = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["report", "--res", "8", "--preset", "cosgap:0.1"])
        .arg("--input")
        .arg(dir.path())
        .arg("--out")
        .arg(report.path())
        .status()
        .unwrap();
    assert!(status.success());
    let (h, rows) = read_csv(&report.path().join("report.csv"));
    assert_eq!(rows.len(), 3);
    let rep_lam = column(&h, &rows, "lambda");
    for (a, b) in rep_lam.iter().zip(&lam) {
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn verify_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["verify", "--dim", "3"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("verify.csv"));
    let pass = h.iter().position(|c| c == "pass").unwrap();
    assert!(rows.iter().all(|r| r[pass] == "1"));
    assert!(dir.path().join("constants.csv").exists());
}

#[test]
fn failure_leaves_a_marker_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "--res", "8", "--preset", "cosgap:0.1", "--q", "4", "--max-iters", "3"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join(FAILED_MARKER).exists());
    assert!(dir.path().join(MANIFEST).exists());

    let missing = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["report", "--res", "8", "--preset", "cosgap:0.1"])
        .arg("--input")
        .arg(missing.path().join("absent"))
        .arg("--out")
        .arg(missing.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let out = bin().args(["solve", "--res", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["fly"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
