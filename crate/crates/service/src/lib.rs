//! HTTP service for counterfactual search jobs.
//!
//! Datasets are discovered in a data directory as `<id>.csv`,
//! `<id>.schema.json` and `<id>.model.json`. Jobs run one at a time on a
//! blocking worker and are persisted as run directories under the jobs
//! directory, so finished results survive a restart.

mod api;
pub mod error;
pub mod jobs;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use moc_core::{load_model, ObservedDataset, PredictionModel};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

pub use api::router;
pub use error::ApiError;
pub use jobs::{Job, JobRequest, JobState, JobStatus};

/// Default number of jobs that may wait for the worker.
pub const DEFAULT_QUEUE_DEPTH: usize = 16;

pub struct Dataset {
    pub id: String,
    pub data: ObservedDataset,
    pub model: Box<dyn PredictionModel>,
}

impl Dataset {
    pub fn load(dir: &Path, id: &str) -> moc_core::Result<Self> {
        let data = ObservedDataset::load(dir.join(format!("{id}.csv")), dir.join(format!("{id}.schema.json")))?;
        let model = load_model(dir.join(format!("{id}.model.json")), data.schema())?;
        Ok(Dataset {
            id: id.to_string(),
            data,
            model,
        })
    }
}

/// Loads every complete dataset triple in `dir`, keyed by id.
pub fn scan_datasets(dir: &Path) -> moc_core::Result<BTreeMap<String, Arc<Dataset>>> {
    let read = fs::read_dir(dir).map_err(|e| moc_core::Error::io(dir, e))?;
    let mut ids: Vec<String> = read
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".schema.json")).map(str::to_string))
        .filter(|id| dir.join(format!("{id}.csv")).is_file() && dir.join(format!("{id}.model.json")).is_file())
        .collect();
    ids.sort();
    let mut out = BTreeMap::new();
    for id in ids {
        let ds = Dataset::load(dir, &id)?;
        out.insert(id, Arc::new(ds));
    }
    Ok(out)
}

pub struct AppState {
    pub datasets: BTreeMap<String, Arc<Dataset>>,
    pub jobs_dir: PathBuf,
    jobs: RwLock<Vec<Arc<Job>>>,
    queue: mpsc::Sender<Arc<Job>>,
}

impl AppState {
    /// Builds the state, restores earlier jobs and starts the worker. Must
    /// be called inside a tokio runtime.
    pub fn start(
        datasets: BTreeMap<String, Arc<Dataset>>,
        jobs_dir: impl Into<PathBuf>,
        queue_depth: usize,
    ) -> std::io::Result<Arc<Self>> {
        let jobs_dir = jobs_dir.into();
        fs::create_dir_all(&jobs_dir)?;
        let restored = jobs::restore_jobs(&jobs_dir, &datasets);
        let (tx, rx) = mpsc::channel(queue_depth.max(1));
        let state = Arc::new(AppState {
            datasets,
            jobs_dir,
            jobs: RwLock::new(restored),
            queue: tx,
        });
        tokio::spawn(worker(Arc::clone(&state), rx));
        Ok(state)
    }

    pub fn job(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().unwrap_or_else(|e| e.into_inner()).iter().find(|j| j.id == id).cloned()
    }

    pub fn dataset(&self, id: &str) -> Result<&Arc<Dataset>, ApiError> {
        self.datasets.get(id).ok_or_else(|| ApiError::not_found(format!("unknown dataset `{id}`")))
    }

    fn submit(&self, request: JobRequest) -> Result<Arc<Job>, ApiError> {
        let dataset = self.dataset(&request.dataset)?;
        let resolved = request.resolve(dataset)?;
        let mut jobs = self.jobs.write().unwrap_or_else(|e| e.into_inner());
        let next = jobs.iter().filter_map(|j| j.id.strip_prefix("job-")?.parse::<u64>().ok()).max().map_or(1, |n| n + 1);
        let job = Arc::new(Job::new(format!("job-{next:06}"), request, resolved, &self.jobs_dir));
        job.persist_request().map_err(|e| ApiError::internal(e.to_string()))?;
        if let Err(e) = self.queue.try_send(Arc::clone(&job)) {
            let _ = fs::remove_dir_all(&job.dir);
            return Err(match e {
                mpsc::error::TrySendError::Full(_) => ApiError::unavailable("job queue is full"),
                mpsc::error::TrySendError::Closed(_) => ApiError::internal("job worker has stopped"),
            });
        }
        jobs.push(Arc::clone(&job));
        Ok(job)
    }
}

async fn worker(state: Arc<AppState>, mut rx: mpsc::Receiver<Arc<Job>>) {
    while let Some(job) = rx.recv().await {
        let Some(dataset) = state.datasets.get(&job.request.dataset).cloned() else {
            continue;
        };
        let _ = tokio::task::spawn_blocking(move || jobs::run_job(&job, &dataset)).await;
    }
}

/// Serves the API until the listener fails.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
