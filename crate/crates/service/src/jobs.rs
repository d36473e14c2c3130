use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use moc_core::evolution::{run_moc_traced, Tracer};
use moc_core::export::{write_run_dir, RunExport, DEFAULT_LIMIT};
use moc_core::{DataPoint, DesiredOutcome, EvolutionConfig, MocProblem, ObservedDataset};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::Dataset;

/// Body of `POST /jobs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub dataset: String,
    /// Row of the dataset to explain; it is held out of the observed data.
    #[serde(default)]
    pub row: Option<usize>,
    /// Inline point keyed by feature name, used instead of `row`.
    #[serde(default)]
    pub point: Option<serde_json::Value>,
    pub target: String,
    #[serde(default)]
    pub freeze: Vec<String>,
    /// Narrowed bounds per numeric feature, `[lower, upper]`.
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
    /// Overrides of the search configuration; missing fields keep defaults.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    #[serde(default)]
    pub limit: Option<usize>,
}

/// A request checked against its dataset, ready to run.
#[derive(Clone, Debug)]
pub struct ResolvedJob {
    pub x_star: DataPoint,
    pub observed: ObservedDataset,
    pub target: DesiredOutcome,
    pub config: EvolutionConfig,
    pub limit: usize,
}

impl JobRequest {
    pub fn resolve(&self, dataset: &Dataset) -> Result<ResolvedJob, ApiError> {
        let target: DesiredOutcome = self.target.parse()?;
        let (x_star, observed) = match (self.row, &self.point) {
            (Some(i), None) => dataset.data.split_off_row(i)?,
            (None, Some(p)) => (dataset.data.schema().point_from_json(p)?, dataset.data.clone()),
            _ => return Err(ApiError::bad_request("give exactly one of `row` and `point`")),
        };
        let mut schema = observed.schema().clone();
        schema.freeze(&self.freeze)?;
        for (name, [lo, hi]) in &self.bounds {
            schema.set_user_bounds(name, *lo, *hi)?;
        }
        let observed = observed.with_schema(schema)?;
        let config = match &self.config {
            Some(v) => EvolutionConfig::from_json_str(&v.to_string())?,
            None => EvolutionConfig::default(),
        };
        config.validate()?;
        let limit = self.limit.unwrap_or(DEFAULT_LIMIT);
        if limit == 0 {
            return Err(ApiError::bad_request("limit must be at least 1"));
        }
        Ok(ResolvedJob {
            x_star,
            observed,
            target,
            config,
            limit,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobStatus {
    pub state: JobState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct Job {
    pub id: String,
    pub request: JobRequest,
    pub resolved: ResolvedJob,
    pub dir: PathBuf,
    pub status: Mutex<JobStatus>,
    /// Last completed generation.
    pub progress: AtomicUsize,
}

impl Job {
    pub fn new(id: String, request: JobRequest, resolved: ResolvedJob, jobs_dir: &Path) -> Self {
        let dir = jobs_dir.join(&id);
        Job {
            id,
            request,
            resolved,
            dir,
            status: Mutex::new(JobStatus {
                state: JobState::Queued,
                error: None,
            }),
            progress: AtomicUsize::new(0),
        }
    }

    pub fn status(&self) -> JobStatus {
        self.status.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn set_status(&self, state: JobState, error: Option<String>) {
        let status = JobStatus { state, error };
        let text = serde_json::to_string_pretty(&status).unwrap_or_default();
        // best effort: the in-memory registry stays authoritative
        let _ = fs::write(self.dir.join("status.json"), text);
        *self.status.lock().unwrap_or_else(|e| e.into_inner()) = status;
    }

    /// Writes `request.json` so the job can be restored after a restart.
    pub fn persist_request(&self) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string_pretty(&self.request).unwrap_or_default();
        fs::write(self.dir.join("request.json"), text)?;
        self.set_status(JobState::Queued, None);
        Ok(())
    }
}

struct Progress<'a>(&'a AtomicUsize);

impl Tracer for Progress<'_> {
    fn population(&mut self, generation: usize, _effective: &[DataPoint]) {
        self.0.store(generation, Ordering::Relaxed);
    }
}

/// Runs a job to completion on the calling thread.
pub fn run_job(job: &Job, dataset: &Dataset) {
    job.set_status(JobState::Running, None);
    let r = &job.resolved;
    let problem = MocProblem {
        model: dataset.model.as_ref(),
        observed: &r.observed,
        x_star: &r.x_star,
        target: r.target,
        sampler: None,
    };
    let outcome = run_moc_traced(&problem, &r.config, &mut Progress(&job.progress)).and_then(|result| {
        write_run_dir(
            &job.dir,
            &RunExport {
                schema: r.observed.schema(),
                x_star: &r.x_star,
                target: &r.target,
                config: &r.config,
                result: &result,
                limit: r.limit,
                surface: None,
            },
        )
    });
    match outcome {
        Ok(()) => job.set_status(JobState::Done, None),
        Err(e) => job.set_status(JobState::Failed, Some(e.to_string())),
    }
}

/// Restores the jobs found under `jobs_dir`. Jobs that never finished are
/// marked failed, since their worker is gone.
pub fn restore_jobs(jobs_dir: &Path, datasets: &BTreeMap<String, Arc<Dataset>>) -> Vec<Arc<Job>> {
    let Ok(read) = fs::read_dir(jobs_dir) else {
        return Vec::new();
    };
    let mut dirs: Vec<PathBuf> = read.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let mut jobs = Vec::new();
    for dir in dirs {
        let Some(id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        let Ok(text) = fs::read_to_string(dir.join("request.json")) else {
            continue;
        };
        let Ok(request) = serde_json::from_str::<JobRequest>(&text) else {
            continue;
        };
        let Some(dataset) = datasets.get(&request.dataset) else {
            continue;
        };
        let Ok(resolved) = request.resolve(dataset) else {
            continue;
        };
        let status: Option<JobStatus> = fs::read_to_string(dir.join("status.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        let job = Job::new(id, request, resolved, jobs_dir);
        match status {
            Some(s) if s.state == JobState::Done || s.state == JobState::Failed => {
                *job.status.lock().unwrap_or_else(|e| e.into_inner()) = s;
            }
            _ => job.set_status(JobState::Failed, Some("interrupted by a service restart".into())),
        }
        jobs.push(Arc::new(job));
    }
    jobs
}
