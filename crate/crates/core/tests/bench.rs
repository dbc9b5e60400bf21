use std::fs;
use std::path::Path;

use rheohom::bench::{
    emit_reports, run_pipeline, validate_config, verify_digests, ExperimentConfig, RunManifest, RunOptions, Stage,
    StageStatus,
};

const SMOKE: &str = include_str!("../../../configs/constant_smoke.toml");

fn smoke() -> ExperimentConfig {
    validate_config(SMOKE).unwrap()
}

fn read(out: &Path, rel: &str) -> Vec<u8> {
    fs::read(out.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn csv_files(manifest: &RunManifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .map(|f| f.path.clone())
        .filter(|p| p.ends_with(".csv"))
        .collect()
}

#[test]
fn smoke_pipeline_completes_with_all_gates() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_pipeline(&smoke(), &RunOptions::pipeline(dir.path())).unwrap();
    assert!(m.complete(), "{:?}", m.stages);
    let failed: Vec<_> = m.gates.iter().filter(|g| !g.passed).collect();
    assert!(failed.is_empty(), "{failed:?}");
    for stage in Stage::PIPELINE {
        assert_eq!(m.stage(stage).unwrap().status, StageStatus::Completed);
        assert!(dir.path().join(format!("stages/{}.done", stage.name())).exists());
    }
    assert!(m.gate("eps_convergence").is_some());
    assert!(m.gate("energy_inequality").is_some());
    assert!(verify_digests(&m, dir.path()).unwrap().is_empty());

    let on_disk: RunManifest = serde_json::from_slice(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(on_disk.config_hash, m.config_hash);
    assert!(!on_disk.notes.is_empty());
}

#[test]
fn resume_skips_stages_and_reproduces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke();
    let fresh = run_pipeline(&cfg, &RunOptions::pipeline(dir.path())).unwrap();
    let before: Vec<(String, Vec<u8>)> = csv_files(&fresh)
        .into_iter()
        .map(|p| (p.clone(), read(dir.path(), &p)))
        .collect();

    let opts = RunOptions {
        resume: true,
        ..RunOptions::pipeline(dir.path())
    };
    let resumed = run_pipeline(&cfg, &opts).unwrap();
    assert!(
        resumed.stages.iter().all(|s| s.status == StageStatus::Resumed),
        "{:?}",
        resumed.stages
    );
    assert_eq!(resumed.gates.len(), fresh.gates.len());
    for (path, bytes) in before {
        assert_eq!(read(dir.path(), &path), bytes, "{path} changed on resume");
    }
    let runs = String::from_utf8(read(dir.path(), "runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 2);
}

#[test]
fn changed_config_invalidates_markers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke();
    let opts = RunOptions {
        out: dir.path().to_path_buf(),
        resume: false,
        stages: vec![Stage::Media],
    };
    run_pipeline(&cfg, &opts).unwrap();
    let mut other = cfg.clone();
    other.seed += 1;
    let again = run_pipeline(&other, &RunOptions { resume: true, ..opts }).unwrap();
    assert_eq!(again.stage(Stage::Media).unwrap().status, StageStatus::Completed);
}

#[test]
fn stage_targets_pull_in_requirements() {
    let closure = Stage::closure(&[Stage::Effective]);
    assert!(closure.contains(&Stage::Media) && closure.contains(&Stage::Cell));
    assert!(!closure.contains(&Stage::Converge));
}

#[test]
fn tampered_output_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out: dir.path().to_path_buf(),
        resume: false,
        stages: vec![Stage::Media, Stage::Growth],
    };
    let m = run_pipeline(&smoke(), &opts).unwrap();
    let target = dir.path().join("growth/growth.csv");
    let mut bytes = fs::read(&target).unwrap();
    bytes.push(b'\n');
    fs::write(&target, bytes).unwrap();
    assert_eq!(
        verify_digests(&m, dir.path()).unwrap(),
        vec!["growth/growth.csv".to_string()]
    );
}

#[test]
fn empty_manifest_emits_header_only_tables() {
    let dir = tempfile::tempdir().unwrap();
    let m = RunManifest::new(&smoke());
    emit_reports(&m, dir.path()).unwrap();
    let gates = String::from_utf8(read(dir.path(), "reports/gates.csv")).unwrap();
    let stages = String::from_utf8(read(dir.path(), "reports/stages.csv")).unwrap();
    assert_eq!(gates, "stage,gate,passed,detail\n");
    assert_eq!(stages, "stage,seed,outputs\n");
}

#[test]
fn gate_rejects_inadmissible_exponents_before_any_work() {
    let text = SMOKE.replace("beta = 2.5", "beta = 1.2");
    let err = validate_config(&text).unwrap_err().to_string();
    assert!(err.contains("alpha"), "{err}");
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
