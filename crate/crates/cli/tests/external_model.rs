use std::fs;
use std::path::{Path, PathBuf};

use moc_core::tree::RegressionForest;
use moc_core::{load_model, ExternalModel, ModelSpec, ObservedDataset, PredictionModel};
use serde_json::json;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn predictor() -> &'static str {
    env!("CARGO_BIN_EXE_moco-predict")
}

#[test]
fn forest_over_the_pipe_matches_in_process() {
    let data = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    let text = fs::read_to_string(fixtures().join("credit.forest.json")).unwrap();
    let forest: RegressionForest = serde_json::from_str(&text).unwrap();
    let external = ExternalModel::new(
        predictor(),
        vec![fixtures().join("credit.forest.json").display().to_string()],
        data.schema().clone(),
    );
    let local = forest.predict_batch(data.rows()).unwrap();
    let piped = external.predict_batch(data.rows()).unwrap();
    assert_eq!(local.len(), piped.len());
    for (a, b) in local.iter().zip(&piped) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn linear_over_the_pipe_matches_in_process() {
    let tmp = tempfile::tempdir().unwrap();
    let data = ObservedDataset::load(fixtures().join("diabetes.csv"), fixtures().join("diabetes.schema.json")).unwrap();
    let spec = ModelSpec::from_json_file(fixtures().join("diabetes.model.json")).unwrap();
    let wrapped = tmp.path().join("wrapped.json");
    fs::write(&wrapped, json!({"schema": data.schema(), "model": spec}).to_string()).unwrap();
    let model_file = tmp.path().join("ext.model.json");
    fs::write(&model_file, json!({"type": "external", "command": predictor(), "args": ["wrapped.json"]}).to_string())
        .unwrap();

    let local = load_model(fixtures().join("diabetes.model.json"), data.schema()).unwrap();
    // the child runs in the model file's directory, so the relative argument resolves
    let piped = load_model(&model_file, data.schema()).unwrap();
    let a = local.predict_batch(data.rows()).unwrap();
    let b = piped.predict_batch(data.rows()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
}

#[test]
fn predictor_rejects_malformed_rows() {
    let data = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    // a diabetes-shaped model fed credit rows: the child must fail, not guess
    let tmp = tempfile::tempdir().unwrap();
    let d = ObservedDataset::load(fixtures().join("diabetes.csv"), fixtures().join("diabetes.schema.json")).unwrap();
    let spec = ModelSpec::from_json_file(fixtures().join("diabetes.model.json")).unwrap();
    let wrapped = tmp.path().join("wrapped.json");
    fs::write(&wrapped, json!({"schema": d.schema(), "model": spec}).to_string()).unwrap();
    let external = ExternalModel::new(predictor(), vec![wrapped.display().to_string()], data.schema().clone());
    assert!(external.predict_batch(&data.rows()[..3]).is_err());
}
