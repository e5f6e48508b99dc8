use std::path::Path;
use std::process::{Command, Output};

fn edgejudge(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgejudge"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = edgejudge(dir.path(), &["evaluate", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("--all-configs"));
    assert_eq!(edgejudge(dir.path(), &["evaluate", "--bogus"]).status.code(), Some(1));
    assert_eq!(edgejudge(dir.path(), &["evaluate", "--config", "cam-pos-13"]).status.code(), Some(1));
    assert_eq!(
        edgejudge(dir.path(), &["synth", "--lean-error", "-3"]).status.code(),
        Some(1)
    );
}

#[test]
fn missing_manifest_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = edgejudge(dir.path(), &["evaluate", "--config", "cam-pos-12", "--manifest", "nope.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));
}

#[test]
fn synth_then_evaluate_writes_fold_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&edgejudge(dir.path(), &["synth", "--skaters", "6", "--jumps", "6", "--seed", "7"]));
    ok(&edgejudge(dir.path(), &["evaluate", "--config", "cam-pos-12"]));
    let csv = read(dir.path().join("evaluate/cam-pos-12/cv.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 6 + 1);
    assert!(lines[7].starts_with("cam-pos-12,aggregate,36,"));
    assert!(dir.path().join("evaluate/cam-pos-12/model.json").exists());
    assert!(!read(dir.path().join("evaluate/run.json")).contains("unix_time"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "2")] {
        ok(&edgejudge(dir.path(), &["--jobs", jobs, "synth", "--skaters", "3", "--jumps", "6"]));
        ok(&edgejudge(dir.path(), &["--jobs", jobs, "evaluate", "--config", "imu-pos-12-ang-12"]));
    }
    for f in [
        "dataset/manifest.csv",
        "dataset/pose/A-000-cam.txt",
        "dataset/detections/B-003-cam.jsonl",
        "evaluate/imu-pos-12-ang-12/cv.csv",
        "evaluate/imu-pos-12-ang-12/cv.json",
        "evaluate/imu-pos-12-ang-12/model.json",
        "evaluate/imu-pos-12-ang-12/importance.csv",
        "evaluate/run.json",
    ] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
}

#[test]
fn all_configs_summary_has_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&edgejudge(dir.path(), &["synth", "--skaters", "3", "--jumps", "4"]));
    ok(&edgejudge(dir.path(), &["evaluate", "--all-configs"]));
    let summary = read(dir.path().join("evaluate/summary.csv"));
    assert_eq!(summary.lines().count(), 11);
    assert!(summary.contains("Joint pos. 12fps (camera)"));
}

#[test]
fn settings_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let settings = dir.path().join("settings.toml");
    std::fs::write(&settings, "[synth]\nn_skaters = 4\njumps_per_skater = 2\n").unwrap();
    let s = settings.to_str().unwrap();
    ok(&edgejudge(dir.path(), &["--settings", s, "synth", "--skaters", "2"]));
    let manifest = read(dir.path().join("dataset/manifest.csv"));
    // 2 skaters from the flag, 2 jumps from the file, camera + IMU each
    assert_eq!(manifest.lines().count(), 1 + 2 * 2 * 2);

    std::fs::write(&settings, "[synth]\nskaters = 4\n").unwrap();
    assert_eq!(edgejudge(dir.path(), &["--settings", s, "synth"]).status.code(), Some(1));
}

#[test]
fn single_class_training_fold_fails_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    ok(&edgejudge(
        dir.path(),
        &["synth", "--skaters", "2", "--jumps", "4", "--skater-error-fractions", "1,0"],
    ));
    let o = edgejudge(dir.path(), &["evaluate", "--config", "imu-ang-12"]);
    assert_eq!(o.status.code(), Some(3));
    let csv = read(dir.path().join("evaluate/imu-ang-12/cv.csv"));
    assert!(csv.contains("failed: degenerate training labels"));
}

#[test]
fn segment_analyze_and_judge() {
    let dir = tempfile::tempdir().unwrap();
    ok(&edgejudge(dir.path(), &["synth", "--skaters", "3", "--jumps", "6"]));
    ok(&edgejudge(dir.path(), &["segment"]));
    let windows = read(dir.path().join("segment/windows.jsonl"));
    assert_eq!(windows.lines().count(), 18);
    assert!(windows.lines().next().unwrap().contains("\"takeoff_frame\""));
    let cropped = read(dir.path().join("segment/pose/A-000-cam.txt"));
    assert_eq!(cropped.lines().filter(|l| !l.starts_with('#')).count(), 204);

    ok(&edgejudge(dir.path(), &["analyze", "--config", "cam-pos-12"]));
    for f in ["importance.csv", "trajectory_distance.csv", "trajectories.csv", "angle_curves.csv"] {
        assert!(dir.path().join("analyze").join(f).exists(), "{f}");
    }
    let imp = read(dir.path().join("analyze/importance.csv"));
    let full: Vec<&str> = imp.lines().filter(|l| l.starts_with("all,")).collect();
    assert!(full[0].contains(",1,l_foot,"), "{}", full[0]);

    let cropped_manifest = dir.path().join("segment/manifest.csv");
    ok(&edgejudge(
        dir.path(),
        &["judge", "--config", "cam-pos-12", "--samples", cropped_manifest.to_str().unwrap()],
    ));
    let judged = read(dir.path().join("judge/judgments.csv"));
    assert_eq!(judged.lines().count(), 1 + 18);
    // first three jumps of each skater are edge errors
    assert!(judged.contains("A-000-cam,") && judged.lines().any(|l| l.starts_with("A-000-cam,") && l.ends_with(",1")));
    assert!(judged.lines().any(|l| l.starts_with("A-005-cam,") && l.ends_with(",0")));
}
