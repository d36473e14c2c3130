//! Run directories and the JSON payloads built from a finished search.
//!
//! A run directory holds:
//! - `pareto.json`: the truncated counterfactual set
//! - `pareto_all.json`: every nondominated counterfactual
//! - `pareto.csv`: the truncated set as a table
//! - `archive.csv` and `archive.json`: every evaluated candidate
//! - `hv.csv`: archive hypervolume per generation
//! - `parallel.csv`: x* and the truncated set, for parallel coordinates
//! - `surface.csv`: the response surface, when one was requested
//!
//! Every file is a pure function of its inputs, so equal runs produce
//! byte-identical directories.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, MocResult, ParetoArchive};
use crate::feature::{DataPoint, FeatureSchema};
use crate::metrics::truncate_counterfactuals;
use crate::model::SurfaceGrid;
use crate::objectives::{DesiredOutcome, ObjectiveVector};

/// Default cap on the number of reported counterfactuals.
pub const DEFAULT_LIMIT: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRecord {
    pub archive_index: usize,
    pub generation: usize,
    pub features: serde_json::Value,
    /// Names of features whose value differs from `x*`.
    pub changed: Vec<String>,
    pub prediction: f64,
    pub objectives: ObjectiveVector,
    pub attains_target: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPayload {
    pub x_star: serde_json::Value,
    pub x_star_prediction: f64,
    pub target: String,
    pub reference: [f64; 4],
    pub hv_trace: Vec<f64>,
    pub counterfactuals: Vec<CounterfactualRecord>,
}

/// Archive indices of the reported counterfactuals: the whole
/// nondominated set, or its greedy truncation to `limit` members.
pub fn reported_indices(result: &MocResult, target: &DesiredOutcome, limit: Option<usize>) -> Vec<usize> {
    let set = &result.counterfactuals;
    let Some(limit) = limit else {
        return set.clone();
    };
    let entries = result.archive.entries();
    let objs: Vec<ObjectiveVector> = set.iter().map(|&i| entries[i].objectives).collect();
    let attains: Vec<bool> = set.iter().map(|&i| target.contains(entries[i].prediction)).collect();
    truncate_counterfactuals(&objs, &attains, limit, result.reference())
        .into_iter()
        .map(|k| set[k])
        .collect()
}

pub fn pareto_payload(
    schema: &FeatureSchema,
    x_star: &DataPoint,
    target: &DesiredOutcome,
    result: &MocResult,
    limit: Option<usize>,
) -> ParetoPayload {
    let entries = result.archive.entries();
    let counterfactuals = reported_indices(result, target, limit)
        .into_iter()
        .map(|i| {
            let e = &entries[i];
            let changed = (0..schema.p())
                .filter(|&j| e.point.get(j) != x_star.get(j))
                .map(|j| schema.feature(j).name().to_string())
                .collect();
            CounterfactualRecord {
                archive_index: i,
                generation: e.generation,
                features: schema.point_to_json(&e.point),
                changed,
                prediction: e.prediction,
                objectives: e.objectives,
                attains_target: target.contains(e.prediction),
            }
        })
        .collect();
    ParetoPayload {
        x_star: schema.point_to_json(x_star),
        x_star_prediction: result.x_star_prediction,
        target: target.to_string(),
        reference: result.reference().0,
        hv_trace: result.archive.hv_trace().to_vec(),
        counterfactuals,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv output: {e}"))
}

/// One row per evaluated candidate: generation, features, prediction, o1-o4.
pub fn write_archive_csv(schema: &FeatureSchema, archive: &ParetoArchive, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["generation".to_string()];
    header.extend(schema.names().map(str::to_string));
    header.extend(["prediction", "o1", "o2", "o3", "o4"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for e in archive.entries() {
        let mut row = vec![e.generation.to_string()];
        row.extend(schema.format_record(&e.point));
        let o = e.objectives;
        row.extend([
            e.prediction.to_string(),
            o.o1.to_string(),
            o.o2.to_string(),
            o.o3.to_string(),
            o.o4.to_string(),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_hv_csv(archive: &ParetoArchive, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["generation", "hv"]).map_err(csv_err)?;
    for r in archive.hv_records() {
        w.write_record([r.generation.to_string(), r.hv.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// `x*` first, then the payload's counterfactuals, with the prediction as
/// the last axis.
pub fn write_parallel_csv(schema: &FeatureSchema, x_star: &DataPoint, payload: &ParetoPayload, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(schema.names().map(str::to_string));
    header.push("prediction".into());
    w.write_record(&header).map_err(csv_err)?;
    let mut first = vec!["x_star".to_string()];
    first.extend(schema.format_record(x_star));
    first.push(payload.x_star_prediction.to_string());
    w.write_record(&first).map_err(csv_err)?;
    for cf in &payload.counterfactuals {
        let x = schema.point_from_json(&cf.features)?;
        let mut row = vec![cf.archive_index.to_string()];
        row.extend(schema.format_record(&x));
        row.push(cf.prediction.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_surface_csv(grid: &SurfaceGrid, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([grid.feature_a.as_str(), grid.feature_b.as_str(), "prediction"])
        .map_err(csv_err)?;
    for (i, a) in grid.a_values.iter().enumerate() {
        for (k, b) in grid.b_values.iter().enumerate() {
            w.write_record([a.to_string(), b.to_string(), grid.predictions[i][k].to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize)]
struct ArchiveJson<'a> {
    metadata: ArchiveMeta<'a>,
    entries: Vec<EntryJson>,
}

#[derive(Serialize)]
struct ArchiveMeta<'a> {
    target: String,
    x_star: serde_json::Value,
    x_star_prediction: f64,
    reference: [f64; 4],
    generations: usize,
    probabilities: &'a [f64],
    config: &'a EvolutionConfig,
}

#[derive(Serialize)]
struct EntryJson {
    generation: usize,
    features: serde_json::Value,
    prediction: f64,
    objectives: ObjectiveVector,
}

pub fn archive_json(
    schema: &FeatureSchema,
    x_star: &DataPoint,
    target: &DesiredOutcome,
    config: &EvolutionConfig,
    result: &MocResult,
) -> serde_json::Value {
    let doc = ArchiveJson {
        metadata: ArchiveMeta {
            target: target.to_string(),
            x_star: schema.point_to_json(x_star),
            x_star_prediction: result.x_star_prediction,
            reference: result.reference().0,
            generations: result.archive.generations(),
            probabilities: &result.probabilities,
            config,
        },
        entries: result
            .archive
            .entries()
            .iter()
            .map(|e| EntryJson {
                generation: e.generation,
                features: schema.point_to_json(&e.point),
                prediction: e.prediction,
                objectives: e.objectives,
            })
            .collect(),
    };
    serde_json::to_value(doc).unwrap_or(serde_json::Value::Null)
}

/// Inputs of one finished run, as needed to write its directory.
pub struct RunExport<'a> {
    pub schema: &'a FeatureSchema,
    pub x_star: &'a DataPoint,
    pub target: &'a DesiredOutcome,
    pub config: &'a EvolutionConfig,
    pub result: &'a MocResult,
    pub limit: usize,
    pub surface: Option<&'a SurfaceGrid>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s.into_bytes()
}

pub fn write_run_dir(dir: impl AsRef<Path>, run: &RunExport<'_>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let truncated = pareto_payload(run.schema, run.x_star, run.target, run.result, Some(run.limit));
    let all = pareto_payload(run.schema, run.x_star, run.target, run.result, None);
    write_file(dir, "pareto.json", &json_bytes(&truncated))?;
    write_file(dir, "pareto_all.json", &json_bytes(&all))?;

    let mut buf = Vec::new();
    let points: Vec<DataPoint> = truncated
        .counterfactuals
        .iter()
        .map(|c| run.schema.point_from_json(&c.features))
        .collect::<Result<_>>()?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<String> = run.schema.names().map(str::to_string).collect();
        header.extend(["prediction", "o1", "o2", "o3", "o4"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for (x, c) in points.iter().zip(&truncated.counterfactuals) {
            let mut row = run.schema.format_record(x);
            let o = c.objectives;
            row.extend([
                c.prediction.to_string(),
                o.o1.to_string(),
                o.o2.to_string(),
                o.o3.to_string(),
                o.o4.to_string(),
            ]);
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    }
    write_file(dir, "pareto.csv", &buf)?;

    buf.clear();
    write_archive_csv(run.schema, &run.result.archive, &mut buf)?;
    write_file(dir, "archive.csv", &buf)?;
    let aj = archive_json(run.schema, run.x_star, run.target, run.config, run.result);
    write_file(dir, "archive.json", &json_bytes(&aj))?;

    buf.clear();
    write_hv_csv(&run.result.archive, &mut buf)?;
    write_file(dir, "hv.csv", &buf)?;

    buf.clear();
    write_parallel_csv(run.schema, run.x_star, &truncated, &mut buf)?;
    write_file(dir, "parallel.csv", &buf)?;

    if let Some(grid) = run.surface {
        buf.clear();
        write_surface_csv(grid, &mut buf)?;
        write_file(dir, "surface.csv", &buf)?;
    }
    Ok(())
}

/// Reads a payload back from a run directory.
pub fn read_pareto(dir: impl AsRef<Path>, all: bool) -> Result<ParetoPayload> {
    let path = dir.as_ref().join(if all { "pareto_all.json" } else { "pareto.json" });
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
