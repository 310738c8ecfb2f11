mod common;

use common::*;
use tempfile::tempdir;

const GRID: [f64; 4] = [3e7, 1e8, 5e8, 1e9];

fn inputs(dir: &std::path::Path, measured: f64, shot: f64, dark: f64) {
    write_flat_trace(&dir.join("m.csv"), &GRID, measured);
    write_flat_trace(&dir.join("s.csv"), &GRID, shot);
    write_flat_trace(&dir.join("d.csv"), &GRID, dark);
}

fn normalize(dir: &std::path::Path, extra: &[&str]) -> std::process::Output {
    let (m, s, d) = (dir.join("m.csv"), dir.join("s.csv"), dir.join("d.csv"));
    let mut args = vec!["normalize", "--measured", p(&m), "--shot", p(&s), "--dark", p(&d), "--out", p(dir)];
    args.extend_from_slice(extra);
    sqz(&args)
}

#[test]
fn reference_levels_give_constant_column() {
    let dir = tempdir().unwrap();
    inputs(dir.path(), -6.5, 0.0, -10.0);
    ok(&normalize(dir.path(), &[]));
    let rows = read_normalized(&dir.path().join("m.normalized.csv"));
    assert_eq!(rows.len(), GRID.len());
    for (f, v, valid) in rows {
        assert!(valid);
        assert!((v + 8.61).abs() < 0.005, "{f}: {v}");
    }
    let summary = read_json(&dir.path().join("m.summary.json"));
    assert_schema("normalize_summary", &summary);
    assert_eq!(summary["invalid_points"], 0);
    assert_eq!(summary["policy"], "flag");
}

#[test]
fn measured_equal_to_shot_gives_zeros() {
    let dir = tempdir().unwrap();
    inputs(dir.path(), -3.0, -3.0, -20.0);
    ok(&normalize(dir.path(), &["--label", "same"]));
    for (_, v, valid) in read_normalized(&dir.path().join("same.normalized.csv")) {
        assert!(valid);
        assert!(v.abs() < 1e-12);
    }
}

#[test]
fn dark_at_or_above_measured_exits_4() {
    let dir = tempdir().unwrap();
    inputs(dir.path(), -10.0, 0.0, -9.0);
    let out = normalize(dir.path(), &[]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("no valid points"), "{}", stderr(&out));
    assert!(!dir.path().join("m.normalized.csv").exists());
}

#[test]
fn partially_invalid_points_are_flagged_or_rejected() {
    let dir = tempdir().unwrap();
    inputs(dir.path(), -6.5, 0.0, -10.0);
    std::fs::write(
        dir.path().join("d.csv"),
        "frequency_hz,power_dbm\n3e7,-10\n1e8,-6.5\n5e8,-10\n1e9,-3\n",
    )
    .unwrap();
    ok(&normalize(dir.path(), &[]));
    let rows = read_normalized(&dir.path().join("m.normalized.csv"));
    let flags: Vec<bool> = rows.iter().map(|r| r.2).collect();
    assert_eq!(flags, [true, false, true, false]);
    assert!(rows[1].1.is_nan());
    assert_eq!(read_json(&dir.path().join("m.summary.json"))["invalid_points"], 2);

    let out = normalize(dir.path(), &["--policy", "error"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn grid_mismatch_exits_3_unless_resampled() {
    let dir = tempdir().unwrap();
    inputs(dir.path(), -6.5, 0.0, -10.0);
    write_flat_trace(&dir.path().join("s.csv"), &[2e7, 2e8, 6e8, 1.2e9], 0.0);
    write_flat_trace(&dir.path().join("d.csv"), &[2e7, 2e8, 6e8, 1.2e9], -10.0);
    assert_eq!(code(&normalize(dir.path(), &[])), 3);

    ok(&normalize(dir.path(), &["--resample", "linear"]));
    for (_, v, _) in read_normalized(&dir.path().join("m.normalized.csv")) {
        assert!((v + 8.61).abs() < 0.005);
    }
    assert_eq!(read_json(&dir.path().join("m.summary.json"))["resample"], "linear");

    // the shot trace no longer covers the measured grid
    write_flat_trace(&dir.path().join("s.csv"), &[5e7, 2e8, 6e8, 1.2e9], 0.0);
    assert_eq!(code(&normalize(dir.path(), &["--resample", "nearest"])), 3);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempdir().unwrap();
    inputs(dir.path(), -6.5, 0.0, -10.0);
    std::fs::write(dir.path().join("m.csv"), "freq,power\n1e7,-3\n2e7,-3\n").unwrap();
    assert_eq!(code(&normalize(dir.path(), &[])), 2);
    std::fs::remove_file(dir.path().join("m.csv")).unwrap();
    assert_eq!(code(&normalize(dir.path(), &[])), 2);
    assert_eq!(code(&normalize(dir.path(), &["--policy", "strict"])), 2);
}
