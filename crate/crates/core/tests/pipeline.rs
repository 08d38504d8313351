use std::fs;
use std::path::Path;

use falsikit::config::parse_config;
use falsikit::falsify::FdrConfig;
use falsikit::pipeline::{build_study, run_pipeline, RunManifest, MANIFEST_FILE, REPORT_FILE};
use falsikit::predict::{bayesian_weights, WeightMode};
use falsikit::scenario::IsolatedScenario;
use falsikit::study::Stage;

fn small(dir: &Path) -> std::path::PathBuf {
    let scenario = IsolatedScenario {
        samples_per_class: 24,
        classes: vec![
            ("bouc_wen".into(), "isolator:bouc_wen".into()),
            ("aashto".into(), "isolator:aashto".into()),
        ],
        ..IsolatedScenario::default()
    };
    scenario.write_files(dir).unwrap()
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != MANIFEST_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(&small(tmp.path())).unwrap();
    let first = run_pipeline(&config, Stage::Predict).unwrap();
    let before = artifacts(&config.output_dir);
    let second = run_pipeline(&config, Stage::Predict).unwrap();
    assert_eq!(before, artifacts(&config.output_dir));
    assert_eq!(first.config_hash, second.config_hash);
    assert_eq!(first.artifacts, second.artifacts);
    assert!(before.iter().any(|(n, _)| n == "ledger_bouc_wen.csv"));
}

#[test]
fn vanishing_alpha_keeps_every_model() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = parse_config(&small(tmp.path())).unwrap();
    config.falsification = FdrConfig::new(1e-300).unwrap();
    let manifest = run_pipeline(&config, Stage::Falsify).unwrap();
    assert_eq!(manifest.savings_ratio, Some(0.0));
    assert_eq!(manifest.total_unfalsified, manifest.total_samples);

    let study = build_study(&config).unwrap();
    let outcome = study.run(Stage::Falsify).unwrap();
    let report = outcome.report.unwrap();
    for (w, class) in outcome.weights.iter().zip(&report.classes) {
        assert_eq!(w, &bayesian_weights(class, None, WeightMode::Cancel).unwrap());
    }
}

#[test]
fn failed_stage_is_recorded_in_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let path = small(tmp.path());
    // A wildly scaled prediction record drives the isolator past the divergence guard.
    let text = fs::read_to_string(tmp.path().join("prediction.csv")).unwrap();
    let scaled: String = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i == 0 {
                return format!("{line}\n");
            }
            let (t, a) = line.split_once(',').unwrap();
            format!("{t},{:e}\n", a.parse::<f64>().unwrap() * 1e12)
        })
        .collect();
    fs::write(tmp.path().join("prediction.csv"), scaled).unwrap();
    let config = parse_config(&path).unwrap();
    let err = run_pipeline(&config, Stage::Predict).unwrap_err();
    let manifest: RunManifest =
        serde_json::from_slice(&fs::read(config.output_dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.completed_stages, vec![Stage::Simulate, Stage::Falsify]);
    assert_eq!(manifest.error.as_deref(), Some(err.to_string().as_str()));
    assert!(config.output_dir.join("ledger_bouc_wen.csv").exists());
}

#[test]
fn falsify_stage_report_has_no_prediction_section() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(&small(tmp.path())).unwrap();
    let manifest = run_pipeline(&config, Stage::Falsify).unwrap();
    let report = fs::read_to_string(config.output_dir.join(REPORT_FILE)).unwrap();
    assert!(report.contains("Falsification"));
    assert!(!report.contains("Prediction"));
    assert_eq!(manifest.prediction_simulations, 0);
    assert_eq!(manifest.completed_stages, vec![Stage::Simulate, Stage::Falsify]);
}
