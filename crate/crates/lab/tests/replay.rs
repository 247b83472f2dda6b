use std::fs;
use std::process::Command;

use qelab::artifact::{CONFIG_FILE, MANIFEST_FILE};
use qelab::{ExperimentConfig, Kind, LabError};

fn small_wegner() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Kind::Wegner);
    cfg.seeds = vec![4, 5];
    cfg.wegner.samples = 4;
    cfg.wegner.x_trials = 500;
    cfg
}

#[test]
fn wegner_writes_one_ledger_row_per_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_wegner();
    let (outcome, manifest) = qelab::run(&cfg, dir.path(), 1).unwrap();
    let table = outcome.table("wegner_theta").unwrap();
    assert_eq!(table.rows.len(), cfg.wegner.kappas.len());
    assert_eq!(table.floats("kappa"), cfg.wegner.kappas);
    let csv = fs::read_to_string(dir.path().join("wegner_theta.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(format!("# qelab {}", env!("CARGO_PKG_VERSION")).as_str()));
    assert_eq!(lines.next(), Some(format!("# config_hash {}", cfg.hash()).as_str()));
    assert_eq!(lines.next(), Some("# seeds 4 5"));
    assert_eq!(manifest.config_hash, cfg.hash());
    assert!(dir.path().join(CONFIG_FILE).exists());
}

#[test]
fn replay_is_identical_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Kind::Exclusion);
    cfg.exclusion.sets = 3;
    cfg.exclusion.qmc_points = 1 << 12;
    cfg.exclusion.census_trials = 6;
    qelab::run(&cfg, dir.path(), 1).unwrap();
    for workers in [1, 2, 4] {
        let report = qelab::replay(dir.path(), workers).unwrap();
        assert!(report.identical(), "{workers} workers: {report:?}");
        assert!(report.matched.len() >= 3);
    }
}

#[test]
fn edited_artifacts_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    qelab::run(&small_wegner(), dir.path(), 1).unwrap();
    let path = dir.path().join("wegner_x.csv");
    let text = fs::read_to_string(&path).unwrap();
    let last = text.trim_end().rsplit_once(',').unwrap().0.len();
    let mut edited = text.clone();
    edited.replace_range(last + 1..last + 2, if &text[last + 1..last + 2] == "9" { "8" } else { "9" });
    fs::write(&path, edited).unwrap();
    let report = qelab::replay(dir.path(), 2).unwrap();
    assert!(!report.identical());
    assert_eq!(report.tampered, vec!["wegner_x.csv".to_string()]);
    assert_eq!(report.mismatched.len(), 1);
    assert_eq!(report.mismatched[0].file, "wegner_x.csv");
}

#[test]
fn edited_config_is_a_hash_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    qelab::run(&small_wegner(), dir.path(), 1).unwrap();
    let path = dir.path().join(CONFIG_FILE);
    let text = fs::read_to_string(&path).unwrap().replace("seeds = [4, 5]", "seeds = [4, 6]");
    fs::write(&path, text).unwrap();
    assert!(matches!(qelab::replay(dir.path(), 1), Err(LabError::HashMismatch { .. })));
}

#[test]
fn missing_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    qelab::run(&small_wegner(), dir.path(), 1).unwrap();
    fs::remove_file(dir.path().join("wegner_theta_samples.csv")).unwrap();
    assert!(matches!(qelab::replay(dir.path(), 1), Err(LabError::MissingArtifact(_))));
    fs::remove_file(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(qelab::replay(dir.path(), 1).is_err());
}

#[test]
fn cli_exit_codes_follow_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, small_wegner().to_toml().unwrap()).unwrap();
    let out = dir.path().join("out");
    let bin = env!("CARGO_BIN_EXE_qelab");
    let run = Command::new(bin)
        .args(["wegner", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stdout));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("pass") && l.contains("wegner_theta_bound")));
    let replay = Command::new(bin).arg("replay").arg(&out).output().unwrap();
    assert!(replay.status.success());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "kind = \"msa\"\n[schedule]\nsigma = 1.5\n").unwrap();
    let run = Command::new(bin).args(["msa", "--config"]).arg(&bad).output().unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("schedule.sigma"));
}
