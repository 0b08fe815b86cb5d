mod common;

use std::fs;

use nominee::pipeline::{run_pipeline, sha256_file, Stage, MANIFEST_FILE};
use nominee::Party;

use common::{fixture_config, read_tree};

#[test]
fn fixture_run_names_a_winner_per_party() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_pipeline(&fixture_config(dir.path())).unwrap();
    assert!(outcome.failure.is_none(), "{:?}", outcome.failure);
    assert_eq!(outcome.manifest.failed_stage, None);
    assert!(outcome.manifest.stages.iter().all(|s| s.status == "ok"));

    let report = outcome.prediction.unwrap();
    let winners = |party| &report.parties.iter().find(|p| p.party == party).unwrap().winners;
    // the fixture gives Sanders and Trump by far the most tweets
    assert_eq!(winners(Party::Democratic), &["Sanders"]);
    assert_eq!(winners(Party::Republican), &["Trump"]);
    assert_eq!(outcome.cv.len(), 15);
    assert_eq!(fs::read_dir(dir.path().join("models")).unwrap().count(), 15);

    let tree = read_tree(dir.path());
    for name in ["manifest.json", "prediction_report.json", "cv_report.csv", "labeled.jsonl", "drops.csv"] {
        assert!(tree.contains_key(name), "missing {name}");
    }
    for out in &outcome.manifest.outputs {
        assert_eq!(sha256_file(&dir.path().join(&out.path)).unwrap(), out.sha256, "{}", out.path);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(&fixture_config(a.path())).unwrap();
    run_pipeline(&fixture_config(b.path())).unwrap();
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
}

#[test]
fn missing_polls_fail_at_predict_and_keep_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = fixture_config(dir.path());
    config.polls = dir.path().join("nope.csv");
    let outcome = run_pipeline(&config).unwrap();
    let (stage, err) = outcome.failure.unwrap();
    assert_eq!(stage, Stage::Predict);
    assert!(err.is_input());
    assert_eq!(outcome.manifest.failed_stage, Some(Stage::Predict));
    assert!(outcome.manifest.inputs.iter().any(|i| i.sha256 == "missing"));

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["failed_stage"], "predict");
    assert!(dir.path().join("cv_report.csv").exists());
    assert!(!dir.path().join("prediction_report.json").exists());
}

#[test]
fn tampered_input_changes_the_manifest() {
    let work = tempfile::tempdir().unwrap();
    let mut config = fixture_config(&work.path().join("a"));
    let copied = work.path().join("annotations.csv");
    fs::copy(&config.annotations, &copied).unwrap();
    config.annotations = copied.clone();
    run_pipeline(&config).unwrap();

    let mut text = fs::read_to_string(&copied).unwrap();
    text = text.replacen("positive", "negative", 1);
    fs::write(&copied, text).unwrap();
    config.out_dir = work.path().join("b");
    run_pipeline(&config).unwrap();

    let manifest = |d: &str| fs::read(work.path().join(d).join(MANIFEST_FILE)).unwrap();
    assert_ne!(manifest("a"), manifest("b"));
}

#[test]
fn a_different_seed_is_recorded() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_pipeline(&fixture_config(a.path())).unwrap();
    let mut config = fixture_config(b.path());
    config.seed = 43;
    let second = run_pipeline(&config).unwrap();
    assert_ne!(first.manifest.seed, second.manifest.seed);
    assert_ne!(
        fs::read(a.path().join(MANIFEST_FILE)).unwrap(),
        fs::read(b.path().join(MANIFEST_FILE)).unwrap()
    );
}
