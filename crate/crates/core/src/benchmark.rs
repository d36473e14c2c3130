//! Method comparison at equal evaluation budgets: MOC variants against
//! random search, with per-generation hypervolume ranks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{random_search, whatif_nearest};
use crate::error::{Error, Result};
use crate::evolution::{run_moc, EvolutionConfig, MocProblem, ParetoArchive};
use crate::feature::{FeatureSchema, ObservedDataset};
use crate::metrics::{coverage_rate, mid_ranks};
use crate::model::{load_model, PredictionModel};
use crate::objectives::{DesiredOutcome, EvalContext, ObjectiveVector};
use crate::sampler::ConditionalSampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// ICE initialization and conditional mutator.
    MocMod,
    /// Neither modification.
    Moc,
    MocIce,
    MocCond,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::MocMod, Method::Moc, Method::MocIce, Method::MocCond, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::MocMod => "mocmod",
            Method::Moc => "moc",
            Method::MocIce => "mocice",
            Method::MocCond => "moccond",
            Method::Random => "random",
        }
    }

    /// `(use_ice_init, use_conditional_mutator)`, `None` for random search.
    pub fn flags(self) -> Option<(bool, bool)> {
        match self {
            Method::MocMod => Some((true, true)),
            Method::Moc => Some((false, false)),
            Method::MocIce => Some((true, false)),
            Method::MocCond => Some((false, true)),
            Method::Random => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown method `{s}`")))
    }
}

/// Counterfactuals produced elsewhere for one row, as a CSV with the
/// dataset's header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalSet {
    pub method: String,
    pub row: usize,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub data: PathBuf,
    pub schema: PathBuf,
    pub model: PathBuf,
    pub rows: Vec<usize>,
    pub target: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub external: Vec<ExternalSet>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::MocMod, Method::Moc, Method::Random]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub config: Option<EvolutionConfig>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Reads a manifest; relative paths are resolved against its directory.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.entries {
            for p in [&mut e.data, &mut e.schema, &mut e.model] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            for x in &mut e.external {
                if x.path.is_relative() {
                    x.path = base.join(&x.path);
                }
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() || self.entries.iter().all(|e| e.rows.is_empty()) {
            return Err(Error::ConfigInvalid("manifest lists no instances".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::ConfigInvalid("manifest lists no methods".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectiveMedians {
    pub o1: f64,
    pub o2: f64,
    pub o3: f64,
    pub o4: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl ObjectiveMedians {
    pub fn of(objs: &[ObjectiveVector]) -> Self {
        let col = |f: fn(&ObjectiveVector) -> f64| median(objs.iter().map(f).collect());
        ObjectiveMedians {
            o1: col(|o| o.o1),
            o2: col(|o| o.o2),
            o3: col(|o| o.o3 as f64),
            o4: col(|o| o.o4),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MethodRun {
    pub method: Method,
    pub archive: ParetoArchive,
    /// Archive indices of the nondominated, de-duplicated set.
    pub counterfactuals: Vec<usize>,
}

impl MethodRun {
    pub fn hv_trace(&self) -> &[f64] {
        self.archive.hv_trace()
    }

    pub fn counterfactual_objectives(&self) -> Vec<ObjectiveVector> {
        let e = self.archive.entries();
        self.counterfactuals.iter().map(|&i| e[i].objectives).collect()
    }

    pub fn attaining_objectives(&self, target: &DesiredOutcome) -> Vec<ObjectiveVector> {
        let e = self.archive.entries();
        self.counterfactuals
            .iter()
            .filter(|&&i| target.contains(e[i].prediction))
            .map(|&i| e[i].objectives)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct InstanceRun {
    pub dataset: String,
    pub row: usize,
    pub target: DesiredOutcome,
    pub runs: Vec<MethodRun>,
}

impl InstanceRun {
    /// Mid-ranks of the methods' hypervolumes at `generation`; the largest
    /// hypervolume gets the highest rank.
    pub fn ranks_at(&self, generation: usize) -> Vec<f64> {
        let hv: Vec<f64> = self
            .runs
            .iter()
            .map(|r| {
                let t = r.hv_trace();
                t[generation.min(t.len() - 1)]
            })
            .collect();
        mid_ranks(&hv)
    }

    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == method)
    }
}

/// Runs every method on row `row` of `data`, which is held out of the
/// observed data. All methods share the seed and evaluate
/// `mu * (generations + 1)` candidates.
pub fn run_instance(
    name: &str,
    model: &dyn PredictionModel,
    data: &ObservedDataset,
    row: usize,
    target: DesiredOutcome,
    config: &EvolutionConfig,
    methods: &[Method],
) -> Result<InstanceRun> {
    let (x_star, observed) = data.split_off_row(row)?;
    let sampler = if methods.iter().any(|m| m.flags().is_some_and(|f| f.1)) {
        Some(ConditionalSampler::fit_default(&observed)?)
    } else {
        None
    };
    let mut runs = Vec::with_capacity(methods.len());
    for &method in methods {
        let run = match method.flags() {
            Some((ice, cond)) => {
                let cfg = EvolutionConfig {
                    use_ice_init: ice,
                    use_conditional_mutator: cond,
                    ..config.clone()
                };
                let problem = MocProblem {
                    model,
                    observed: &observed,
                    x_star: &x_star,
                    target,
                    sampler: sampler.as_ref(),
                };
                let r = run_moc(&problem, &cfg)?;
                MethodRun {
                    method,
                    archive: r.archive,
                    counterfactuals: r.counterfactuals,
                }
            }
            None => {
                let archive = random_search(
                    &x_star,
                    &target,
                    model,
                    &observed,
                    config.mu,
                    config.generations + 1,
                    config.k,
                    config.seed,
                )?;
                let counterfactuals = archive.counterfactual_set();
                MethodRun {
                    method,
                    archive,
                    counterfactuals,
                }
            }
        };
        runs.push(run);
    }
    Ok(InstanceRun {
        dataset: name.to_string(),
        row,
        target,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub dataset: String,
    pub row: usize,
    pub other: String,
    /// Attaining counterfactuals of the other method.
    pub n_other: usize,
    /// `None` when the other method found no attaining counterfactual.
    pub coverage: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BenchmarkReport {
    pub methods: Vec<Method>,
    pub instances: Vec<InstanceRun>,
    pub coverage: Vec<CoverageRow>,
}

impl BenchmarkReport {
    pub fn generations(&self) -> usize {
        self.instances
            .iter()
            .flat_map(|i| i.runs.iter().map(|r| r.hv_trace().len()))
            .max()
            .unwrap_or(0)
    }

    /// Mean rank per generation (rows) and method (columns).
    pub fn mean_ranks(&self) -> Vec<Vec<f64>> {
        let n = self.instances.len().max(1) as f64;
        (0..self.generations())
            .map(|g| {
                let mut sums = vec![0.0; self.methods.len()];
                for inst in &self.instances {
                    for (s, r) in sums.iter_mut().zip(inst.ranks_at(g)) {
                        *s += r;
                    }
                }
                sums.into_iter().map(|s| s / n).collect()
            })
            .collect()
    }

    pub fn write_mean_ranks_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["generation".to_string()];
        header.extend(self.methods.iter().map(|m| m.name().to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for (g, row) in self.mean_ranks().into_iter().enumerate() {
            let mut rec = vec![g.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// One row per instance and method: final HV and rank, set sizes and
    /// objective medians over the nondominated set.
    pub fn write_summary_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "dataset", "row", "method", "final_hv", "final_rank", "n_nondominated", "n_attaining", "median_o1",
            "median_o2", "median_o3", "median_o4",
        ])
        .map_err(csv_err)?;
        for inst in &self.instances {
            let last = inst.runs.iter().map(|r| r.hv_trace().len()).max().unwrap_or(1) - 1;
            let ranks = inst.ranks_at(last);
            for (r, rank) in inst.runs.iter().zip(ranks) {
                let med = ObjectiveMedians::of(&r.counterfactual_objectives());
                w.write_record([
                    inst.dataset.clone(),
                    inst.row.to_string(),
                    r.method.name().to_string(),
                    r.hv_trace()[r.hv_trace().len() - 1].to_string(),
                    rank.to_string(),
                    r.counterfactuals.len().to_string(),
                    r.attaining_objectives(&inst.target).len().to_string(),
                    med.o1.to_string(),
                    med.o2.to_string(),
                    med.o3.to_string(),
                    med.o4.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write_coverage_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dataset", "row", "other", "n_other", "coverage"])
            .map_err(csv_err)?;
        for c in &self.coverage {
            w.write_record([
                c.dataset.clone(),
                c.row.to_string(),
                c.other.clone(),
                c.n_other.to_string(),
                c.coverage.map_or_else(String::new, |v| v.to_string()),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv output: {e}"))
}

/// Coverage of `ours` (attaining members only) over an outside set of
/// points, which are evaluated against the same `x*` and target.
pub fn coverage_of_points(
    ours: &[ObjectiveVector],
    theirs: &[crate::feature::DataPoint],
    ctx: &EvalContext<'_>,
) -> Result<(usize, Option<f64>)> {
    let evals = ctx.evaluate_batch(theirs)?;
    let attaining: Vec<ObjectiveVector> = evals
        .into_iter()
        .filter(|(y, _)| ctx.target.contains(*y))
        .map(|(_, o)| o)
        .collect();
    if attaining.is_empty() {
        return Ok((0, None));
    }
    Ok((attaining.len(), Some(coverage_rate(ours, &attaining)?)))
}

/// Loads every manifest entry and runs all instances. Coverage is reported
/// for the first MOC method in the manifest against random search, the
/// nearest-observed baseline and every imported external set.
pub fn run_benchmark(manifest: &Manifest) -> Result<BenchmarkReport> {
    manifest.validate()?;
    let config = manifest.config.clone().unwrap_or_default();
    config.validate()?;
    let mut instances = Vec::new();
    let mut coverage = Vec::new();
    for entry in &manifest.entries {
        let schema = FeatureSchema::from_json_file(&entry.schema)?;
        let data = ObservedDataset::load_with_schema(&entry.data, schema)?;
        let model = load_model(&entry.model, data.schema())?;
        let target: DesiredOutcome = entry.target.parse()?;
        let cfg = EvolutionConfig {
            epsilon: entry.epsilon.or(config.epsilon),
            ..config.clone()
        };
        for &row in &entry.rows {
            let inst = run_instance(&entry.name, model.as_ref(), &data, row, target, &cfg, &manifest.methods)?;
            let (x_star, observed) = data.split_off_row(row)?;
            let ctx = EvalContext::new(model.as_ref(), &x_star, target, &observed, cfg.k)?;
            if let Some(ours) = inst.runs.iter().find(|r| r.method != Method::Random) {
                let ours_objs = ours.attaining_objectives(&target);
                let mut push = |other: String, pts: Vec<crate::feature::DataPoint>| -> Result<()> {
                    let (n_other, cov) = coverage_of_points(&ours_objs, &pts, &ctx)?;
                    coverage.push(CoverageRow {
                        dataset: entry.name.clone(),
                        row,
                        other,
                        n_other,
                        coverage: cov,
                    });
                    Ok(())
                };
                if let Some(rnd) = inst.run(Method::Random) {
                    let e = rnd.archive.entries();
                    push("random".into(), rnd.counterfactuals.iter().map(|&i| e[i].point.clone()).collect())?;
                }
                match whatif_nearest(&x_star, &target, model.as_ref(), &observed) {
                    Ok(i) => push("whatif".into(), vec![observed.rows()[i].clone()])?,
                    Err(Error::NoFeasiblePoint) => {}
                    Err(e) => return Err(e),
                }
                for ext in entry.external.iter().filter(|x| x.row == row) {
                    let pts = ObservedDataset::load_with_schema(&ext.path, data.schema().clone())?;
                    push(ext.method.clone(), pts.rows().to_vec())?;
                }
            }
            instances.push(inst);
        }
    }
    Ok(BenchmarkReport {
        methods: manifest.methods.clone(),
        instances,
        coverage,
    })
}
