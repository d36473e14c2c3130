//! Batch predictor speaking the external-model protocol: headerless CSV
//! rows on stdin, one prediction per line on stdout.
//!
//! Usage: moco-predict <model-file>
//!
//! The model file holds either a serialized regression forest or
//! `{"schema": [...], "model": <linear model>}`.

use std::io::{self, BufWriter, Read, Write};
use std::process::ExitCode;

use moc_core::tree::RegressionForest;
use moc_core::{FeatureSchema, ModelSpec, PredictionModel};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelFile {
    Forest(RegressionForest),
    Wrapped { schema: FeatureSchema, model: ModelSpec },
}

fn run() -> Result<(), String> {
    let path = std::env::args().nth(1).ok_or("usage: moco-predict <model-file>")?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let (schema, model): (FeatureSchema, Box<dyn PredictionModel>) = match file {
        ModelFile::Forest(f) => (f.schema.clone(), Box::new(f)),
        ModelFile::Wrapped { schema, model } => {
            if matches!(model, ModelSpec::External { .. }) {
                return Err("external models cannot be nested".into());
            }
            let m = model.build(&schema, None).map_err(|e| e.to_string())?;
            (schema, m)
        }
    };

    let mut input = Vec::new();
    io::stdin().read_to_end(&mut input).map_err(|e| e.to_string())?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input.as_slice());
    let mut batch = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("line {}: {e}", i + 1))?;
        let cells: Vec<&str> = rec.iter().collect();
        batch.push(schema.parse_record(&cells).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    let preds = model.predict_batch(&batch).map_err(|e| e.to_string())?;
    let mut out = BufWriter::new(io::stdout().lock());
    for p in preds {
        writeln!(out, "{p}").map_err(|e| e.to_string())?;
    }
    out.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("moco-predict: {e}");
            ExitCode::FAILURE
        }
    }
}
