use std::fs;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use moc_core::export::read_pareto;
use moc_core::model::{response_surface_grid, SurfaceGrid};
use moc_core::{DataPoint, ObservedDataset};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::jobs::JobState;
use crate::{AppState, Dataset, JobRequest};

pub const HISTOGRAM_BINS: usize = 20;
pub const MAX_RESOLUTION: usize = 200;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", get(datasets))
        .route("/datasets/{id}/rows/{row}", get(dataset_row))
        .route("/jobs", post(submit))
        .route("/jobs/{id}", get(job_status))
        .route("/jobs/{id}/pareto", get(pareto))
        .route("/jobs/{id}/hv", get(hv))
        .route("/surface", post(surface))
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Serialize)]
struct DatasetInfo<'a> {
    id: &'a str,
    rows: usize,
    features: Vec<serde_json::Value>,
}

async fn datasets(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let list: Vec<DatasetInfo> = state
        .datasets
        .values()
        .map(|d| DatasetInfo {
            id: &d.id,
            rows: d.data.len(),
            features: d
                .data
                .schema()
                .features()
                .iter()
                .map(|f| serde_json::to_value(f).unwrap_or_default())
                .collect(),
        })
        .collect();
    Json(json!({ "datasets": list }))
}

async fn dataset_row(
    State(state): State<Arc<AppState>>,
    Path((id, row)): Path<(String, usize)>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let ds = state.dataset(&id)?;
    let x = ds
        .data
        .rows()
        .get(row)
        .ok_or_else(|| ApiError::not_found(format!("row {row} out of range")))?;
    let prediction = ds.model.predict(x).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({
        "row": row,
        "point": ds.data.schema().point_to_json(x),
        "prediction": prediction,
    })))
}

async fn submit(
    State(state): State<Arc<AppState>>,
    body: Result<Json<JobRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(request) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let job = state.submit(request)?;
    Ok((StatusCode::ACCEPTED, Json(json!({"id": job.id}))).into_response())
}

fn find_job(state: &AppState, id: &str) -> Result<Arc<crate::Job>, ApiError> {
    state.job(id).ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))
}

async fn job_status(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let job = find_job(&state, &id)?;
    let status = job.status();
    Ok(Json(json!({
        "id": job.id,
        "state": status.state,
        "error": status.error,
        "generation": job.progress.load(Ordering::Relaxed),
        "generations": job.resolved.config.generations,
        "request": job.request,
    })))
}

fn require_done(job: &crate::Job) -> Result<(), ApiError> {
    match job.status().state {
        JobState::Done => Ok(()),
        JobState::Failed => Err(ApiError::conflict(format!("job `{}` failed", job.id))),
        _ => Err(ApiError::conflict(format!("job `{}` has not finished", job.id))),
    }
}

#[derive(Deserialize)]
struct ParetoQuery {
    #[serde(default)]
    all: bool,
}

fn file_response(path: std::path::PathBuf, content_type: &'static str) -> Result<Response, ApiError> {
    let bytes = fs::read(&path).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

/// Returns the stored file as is, so repeated reads are byte-identical.
async fn pareto(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ParetoQuery>,
) -> Result<Response, ApiError> {
    let job = find_job(&state, &id)?;
    require_done(&job)?;
    let name = if q.all { "pareto_all.json" } else { "pareto.json" };
    file_response(job.dir.join(name), "application/json")
}

async fn hv(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = find_job(&state, &id)?;
    require_done(&job)?;
    file_response(job.dir.join("hv.csv"), "text/csv")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceRequest {
    #[serde(default)]
    job_id: Option<String>,
    #[serde(default)]
    dataset: Option<String>,
    #[serde(default)]
    row: Option<usize>,
    #[serde(default)]
    point: Option<serde_json::Value>,
    feature_a: String,
    feature_b: String,
    resolution: usize,
}

#[derive(Debug, Serialize)]
struct Histogram {
    edges: Vec<f64>,
    counts: Vec<usize>,
}

/// Equal-width bins over the observed range; the last bin is closed.
fn histogram(observed: &ObservedDataset, j: usize) -> Histogram {
    let (lo, hi) = observed.derived_ranges()[j].unwrap_or((0.0, 0.0));
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let edges = (0..=HISTOGRAM_BINS)
        .map(|i| if i == HISTOGRAM_BINS { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; HISTOGRAM_BINS];
    for x in observed.rows() {
        if let Some(v) = x.get(j).as_num() {
            let bin = if width > 0.0 {
                (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            counts[bin] += 1;
        }
    }
    Histogram { edges, counts }
}

#[derive(Serialize)]
struct SurfaceResponse {
    grid: SurfaceGrid,
    histogram_a: Histogram,
    histogram_b: Histogram,
    x_star: [f64; 2],
    counterfactuals: Vec<serde_json::Value>,
}

async fn surface(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SurfaceRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<SurfaceResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if !(2..=MAX_RESOLUTION).contains(&req.resolution) {
        return Err(ApiError::bad_request(format!("resolution must lie in 2..={MAX_RESOLUTION}")));
    }
    let (dataset, x_star, observed, job): (Arc<Dataset>, DataPoint, ObservedDataset, _) = match &req.job_id {
        Some(id) => {
            let job = find_job(&state, id)?;
            let ds = Arc::clone(state.dataset(&job.request.dataset)?);
            (ds, job.resolved.x_star.clone(), job.resolved.observed.clone(), Some(job))
        }
        None => {
            let id = req
                .dataset
                .as_deref()
                .ok_or_else(|| ApiError::bad_request("give `job_id` or `dataset`"))?;
            let ds = Arc::clone(state.dataset(id)?);
            let (x, obs) = match (req.row, &req.point) {
                (Some(i), None) => ds.data.split_off_row(i)?,
                (None, Some(p)) => (ds.data.schema().point_from_json(p)?, ds.data.clone()),
                _ => return Err(ApiError::bad_request("give exactly one of `row` and `point`")),
            };
            (ds, x, obs, None)
        }
    };
    let schema = observed.schema();
    let index = |name: &str| {
        schema
            .index_of(name)
            .ok_or_else(|| ApiError::bad_request(format!("unknown feature `{name}`")))
    };
    let a = index(&req.feature_a)?;
    let b = index(&req.feature_b)?;
    let grid = response_surface_grid(dataset.model.as_ref(), &x_star, &observed, a, b, req.resolution)?;

    let mut counterfactuals = Vec::new();
    if let Some(job) = job.filter(|j| j.status().state == JobState::Done) {
        let payload = read_pareto(&job.dir, false)?;
        for c in payload.counterfactuals {
            let x = schema.point_from_json(&c.features)?;
            counterfactuals.push(json!({
                "a": x.get(a).as_num(),
                "b": x.get(b).as_num(),
                "prediction": c.prediction,
            }));
        }
    }
    Ok(Json(SurfaceResponse {
        histogram_a: histogram(&observed, a),
        histogram_b: histogram(&observed, b),
        x_star: [x_star.get(a).as_num().unwrap_or(f64::NAN), x_star.get(b).as_num().unwrap_or(f64::NAN)],
        grid,
        counterfactuals,
    }))
}
