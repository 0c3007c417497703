use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twinsplit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinsplit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn simulate_writes_requested_shots() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsplit(&["--shots-z", "6", "--shots-perp", "4", "--seed", "3", "simulate", "--out", "s.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), twinsplit::io::SHOT_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| r.contains(",perp,")).count(), 4);
}

#[test]
fn paper_preset_has_campaign_shot_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsplit(&["--preset", "paper", "simulate"], dir.path());
    assert!(out.status.success());
    let rows = data_rows(&dir.path().join("shots.csv"));
    assert_eq!(rows.iter().filter(|r| r.contains(",z,")).count(), 506);
    assert_eq!(rows.iter().filter(|r| r.contains(",perp,")).count(), 487);
}

#[test]
fn simulate_and_analyze_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| {
        let shots = format!("{tag}.csv");
        let args = ["--preset", "paper", "--seed", "5", "--bootstrap", "300", "--threads", threads];
        assert!(twinsplit(&[&args[..], &["simulate", "--out", &shots]].concat(), dir.path()).status.success());
        let out = twinsplit(&[&args[..], &["analyze", &shots, "--out", tag]].concat(), dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(dir.path().join(&shots)).unwrap(),
            fs::read(dir.path().join(tag).join("results.json")).unwrap(),
        )
    };
    let first = run("a", "1");
    assert_eq!(first, run("b", "1"));
    assert_eq!(first, run("c", "3"));
}

#[test]
fn analyze_reports_missing_z_shots() {
    let dir = tempfile::tempdir().unwrap();
    assert!(twinsplit(&["--shots-z", "0", "--shots-perp", "20", "simulate"], dir.path()).status.success());
    let out = twinsplit(&["analyze", "shots.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no z-basis shots in bin"));
}

#[test]
fn analyze_with_calibration_records_fit_source() {
    let dir = tempfile::tempdir().unwrap();
    let sim = ["--preset", "paper", "--bootstrap", "200", "simulate", "--calibration-out", "cal.csv", "--calibration-shots", "500"];
    assert!(twinsplit(&sim, dir.path()).status.success());
    let out = twinsplit(&["--bootstrap", "200", "analyze", "shots.csv", "--calibration", "cal.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = fs::read_to_string(dir.path().join("results/results.json")).unwrap();
    assert!(json.contains("\"fit_source\": \"calibration\""), "{json}");
    for table in ["fig3a.csv", "fig3b.csv", "fig3c.csv", "fig4.csv"] {
        assert_eq!(data_rows(&dir.path().join("results").join(table)).len(), 1, "{table}");
    }
}

#[test]
fn quick_verify_passes_and_forced_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = twinsplit(&["verify", "--quick", "--out", "v.json"], dir.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("witness N=100"));
    assert!(dir.path().join("v.json").exists());
    let bad = twinsplit(&["verify", "--quick", "--debug-tolerance", "1"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("failed:"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "shots_z = 7\nshots_perp = 2\nn_mean = 40.0\n").unwrap();
    let out = twinsplit(&["--config", "c.toml", "--shots-perp", "3", "simulate"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("shots.csv"));
    assert_eq!(rows.len(), 10);

    fs::write(dir.path().join("bad.toml"), "shots_zz = 1\n").unwrap();
    let out = twinsplit(&["--config", "bad.toml", "simulate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
