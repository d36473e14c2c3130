//! Modified NSGA-II search for counterfactuals.

mod archive;
pub mod operators;
pub mod selection;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use archive::{ArchiveEntry, HvRecord, ParetoArchive};
pub use operators::{init_probabilities, initialize_population, mutate, sbx_crossover, sbx_pair};
pub use selection::{
    binary_tournament, crowding_distance_mixed, nondominated_sort, penalize_violators, rank_population,
    select_survivors, Ranking,
};

use crate::error::{Error, Result};
use crate::feature::{DataPoint, ObservedDataset, Value};
use crate::model::{ice_sigmas, PredictionModel, DEFAULT_ICE_GRID};
use crate::objectives::{DesiredOutcome, EvalContext, ObjectiveVector, ReferencePoint};
use crate::sampler::ConditionalSampler;

fn default_mu() -> usize {
    20
}
fn default_generations() -> usize {
    175
}
fn default_p_rec() -> f64 {
    0.57
}
fn default_p_rec_gen() -> f64 {
    0.85
}
fn default_p_rec_use_orig() -> f64 {
    0.88
}
fn default_p_mut() -> f64 {
    0.79
}
fn default_p_mut_gen() -> f64 {
    0.56
}
fn default_p_mut_use_orig() -> f64 {
    0.32
}
fn default_p_min() -> f64 {
    0.01
}
fn default_p_max() -> f64 {
    0.99
}
fn default_k() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_sbx_eta() -> f64 {
    20.0
}
fn default_mutation_scale() -> f64 {
    0.1
}
fn default_ice_grid() -> usize {
    DEFAULT_ICE_GRID
}

/// Search parameters. Every field has a default, so partial JSON configs
/// are accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default = "default_mu")]
    pub mu: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_p_rec")]
    pub p_rec: f64,
    #[serde(default = "default_p_rec_gen")]
    pub p_rec_gen: f64,
    #[serde(default = "default_p_rec_use_orig")]
    pub p_rec_use_orig: f64,
    #[serde(default = "default_p_mut")]
    pub p_mut: f64,
    #[serde(default = "default_p_mut_gen")]
    pub p_mut_gen: f64,
    #[serde(default = "default_p_mut_use_orig")]
    pub p_mut_use_orig: f64,
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    /// Candidates with `o1 > epsilon` are pushed behind every feasible front.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_true")]
    pub use_ice_init: bool,
    #[serde(default = "default_true")]
    pub use_conditional_mutator: bool,
    #[serde(default)]
    pub early_stop_patience: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// SBX distribution index.
    #[serde(default = "default_sbx_eta")]
    pub sbx_eta: f64,
    /// Gaussian mutation sd as a fraction of the observed range.
    #[serde(default = "default_mutation_scale")]
    pub mutation_scale: f64,
    #[serde(default = "default_ice_grid")]
    pub ice_grid: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            mu: default_mu(),
            generations: default_generations(),
            p_rec: default_p_rec(),
            p_rec_gen: default_p_rec_gen(),
            p_rec_use_orig: default_p_rec_use_orig(),
            p_mut: default_p_mut(),
            p_mut_gen: default_p_mut_gen(),
            p_mut_use_orig: default_p_mut_use_orig(),
            p_min: default_p_min(),
            p_max: default_p_max(),
            epsilon: None,
            k: default_k(),
            use_ice_init: true,
            use_conditional_mutator: true,
            early_stop_patience: None,
            seed: 0,
            sbx_eta: default_sbx_eta(),
            mutation_scale: default_mutation_scale(),
            ice_grid: default_ice_grid(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_rec", self.p_rec),
            ("p_rec_gen", self.p_rec_gen),
            ("p_rec_use_orig", self.p_rec_use_orig),
            ("p_mut", self.p_mut),
            ("p_mut_gen", self.p_mut_gen),
            ("p_mut_use_orig", self.p_mut_use_orig),
            ("p_min", self.p_min),
            ("p_max", self.p_max),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ConfigInvalid(format!("{name} = {v} is not a probability")));
            }
        }
        if self.p_min > self.p_max {
            return Err(Error::ConfigInvalid(format!(
                "p_min ({}) exceeds p_max ({})",
                self.p_min, self.p_max
            )));
        }
        if self.mu < 2 {
            return Err(Error::ConfigInvalid(format!("mu must be at least 2, got {}", self.mu)));
        }
        if self.k == 0 {
            return Err(Error::ConfigInvalid("k must be at least 1".into()));
        }
        if let Some(eps) = self.epsilon {
            if eps.is_nan() || eps < 0.0 {
                return Err(Error::ConfigInvalid(format!("epsilon must be >= 0, got {eps}")));
            }
        }
        if self.early_stop_patience == Some(0) {
            return Err(Error::ConfigInvalid("early_stop_patience must be positive".into()));
        }
        if [self.sbx_eta, self.mutation_scale].iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::ConfigInvalid("sbx_eta and mutation_scale must be >= 0".into()));
        }
        if self.ice_grid < 2 {
            return Err(Error::ConfigInvalid("ice_grid must be at least 2".into()));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: EvolutionConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub genes: DataPoint,
    /// `true` where the effective value is taken from `x*`.
    pub use_original: Vec<bool>,
    pub prediction: f64,
    pub objectives: ObjectiveVector,
    pub generation_born: usize,
}

impl Candidate {
    pub fn effective(&self, x_star: &DataPoint) -> DataPoint {
        DataPoint::new(
            self.genes
                .values()
                .iter()
                .zip(&self.use_original)
                .zip(x_star.values())
                .map(|((&g, &m), &o)| if m { o } else { g })
                .collect(),
        )
    }
}

/// Observation hooks into the search, used by tests. All methods default to
/// doing nothing.
pub trait Tracer {
    /// One SBX recombination of a numeric gene, before clamping.
    fn sbx(&mut self, _a: f64, _b: f64, _c1: f64, _c2: f64) {}
    /// One value drawn by the conditional mutator.
    fn conditional_draw(&mut self, _feature: usize, _value: Value) {}
    /// Survivor selection from the pool `parents ++ offspring`.
    fn survivors(&mut self, _generation: usize, _pool: &[ObjectiveVector], _selected: &[usize]) {}
    /// Population after selection (generation 0 is the initial one).
    fn population(&mut self, _generation: usize, _effective: &[DataPoint]) {}
}

impl Tracer for () {}

/// Everything a search needs besides the configuration.
pub struct MocProblem<'a> {
    pub model: &'a dyn PredictionModel,
    pub observed: &'a ObservedDataset,
    pub x_star: &'a DataPoint,
    pub target: DesiredOutcome,
    /// Prefit sampler; fit from `observed` on demand when absent.
    pub sampler: Option<&'a ConditionalSampler>,
}

#[derive(Clone, Debug)]
pub struct MocResult {
    pub archive: ParetoArchive,
    /// Archive indices of the nondominated, de-duplicated counterfactuals.
    pub counterfactuals: Vec<usize>,
    pub x_star_prediction: f64,
    /// Initialization probability of every feature.
    pub probabilities: Vec<f64>,
    pub final_population: Vec<Candidate>,
}

impl MocResult {
    pub fn reference(&self) -> &ReferencePoint {
        self.archive.reference()
    }
}

/// Per-feature initialization probabilities: ICE-based over actionable
/// features when enabled, the midpoint of `[p_min, p_max]` otherwise.
/// Frozen features get 0.
pub fn feature_probabilities(problem: &MocProblem<'_>, config: &EvolutionConfig) -> Result<Vec<f64>> {
    let schema = problem.observed.schema();
    let actionable: Vec<usize> = (0..schema.p()).filter(|&j| schema.feature(j).actionable()).collect();
    let mid = (config.p_min + config.p_max) / 2.0;
    let mut probs = vec![0.0; schema.p()];
    if config.use_ice_init && !actionable.is_empty() {
        let sigmas = ice_sigmas(problem.model, problem.x_star, problem.observed, config.ice_grid)?;
        let picked: Vec<f64> = actionable.iter().map(|&j| sigmas[j]).collect();
        for (&j, pj) in actionable
            .iter()
            .zip(init_probabilities(&picked, config.p_min, config.p_max))
        {
            probs[j] = pj;
        }
    } else {
        for &j in &actionable {
            probs[j] = mid;
        }
    }
    Ok(probs)
}

fn evaluate(ctx: &EvalContext<'_>, x_star: &DataPoint, pop: &mut [Candidate]) -> Result<()> {
    let pts: Vec<DataPoint> = pop.iter().map(|c| c.effective(x_star)).collect();
    let evals = ctx.evaluate_batch(&pts)?;
    for (c, (y, o)) in pop.iter_mut().zip(evals) {
        c.prediction = y;
        c.objectives = o;
    }
    Ok(())
}

fn record(archive: &mut ParetoArchive, generation: usize, x_star: &DataPoint, pop: &[Candidate]) {
    archive.record_generation(
        generation,
        pop.iter().map(|c| (c.effective(x_star), c.prediction, c.objectives)),
    );
}

pub fn run_moc(problem: &MocProblem<'_>, config: &EvolutionConfig) -> Result<MocResult> {
    run_moc_traced(problem, config, &mut ())
}

/// Runs the search. The loop per generation: binary tournaments on
/// (rank, crowding), recombination of consecutive parent pairs, mutation,
/// evaluation, then survivor selection from parents and offspring.
pub fn run_moc_traced(
    problem: &MocProblem<'_>,
    config: &EvolutionConfig,
    tracer: &mut dyn Tracer,
) -> Result<MocResult> {
    config.validate()?;
    let observed = problem.observed;
    let schema = observed.schema();
    let x_star = problem.x_star;
    schema.validate(x_star)?;
    let ctx = EvalContext::new(problem.model, x_star, problem.target, observed, config.k)?;
    let x_star_prediction = problem.model.predict(x_star)?;
    let reference = crate::objectives::reference_point(x_star_prediction, &problem.target, schema.p());

    let fitted;
    let sampler = if config.use_conditional_mutator {
        match problem.sampler {
            Some(s) => Some(s),
            None => {
                fitted = ConditionalSampler::fit_default(observed)?;
                Some(&fitted)
            }
        }
    } else {
        None
    };

    let probabilities = feature_probabilities(problem, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut archive = ParetoArchive::new(reference);

    let mut pop = initialize_population(x_star, config.mu, schema, observed, &probabilities, &mut rng);
    evaluate(&ctx, x_star, &mut pop)?;
    record(&mut archive, 0, x_star, &pop);
    tracer.population(0, &pop.iter().map(|c| c.effective(x_star)).collect::<Vec<_>>());

    let mut stale = 0;
    for generation in 1..=config.generations {
        let effective: Vec<DataPoint> = pop.iter().map(|c| c.effective(x_star)).collect();
        let objectives: Vec<ObjectiveVector> = pop.iter().map(|c| c.objectives).collect();
        let ranking = rank_population(&objectives, &effective, config.epsilon);

        let mut offspring = Vec::with_capacity(config.mu + 1);
        while offspring.len() < config.mu {
            let a = binary_tournament(&ranking, &mut rng);
            let b = binary_tournament(&ranking, &mut rng);
            let (mut c1, mut c2) =
                sbx_crossover(&pop[a], &pop[b], config, schema, x_star, generation, &mut rng, tracer);
            mutate(&mut c1, config, observed, x_star, sampler, &mut rng, tracer);
            mutate(&mut c2, config, observed, x_star, sampler, &mut rng, tracer);
            offspring.push(c1);
            offspring.push(c2);
        }
        offspring.truncate(config.mu);
        evaluate(&ctx, x_star, &mut offspring)?;
        record(&mut archive, generation, x_star, &offspring);

        let mut pool = pop;
        pool.extend(offspring);
        let pool_pts: Vec<DataPoint> = pool.iter().map(|c| c.effective(x_star)).collect();
        let pool_objs: Vec<ObjectiveVector> = pool.iter().map(|c| c.objectives).collect();
        let keep = select_survivors(&pool_objs, &pool_pts, config.mu, config.epsilon);
        tracer.survivors(generation, &pool_objs, &keep);
        let mut keep_iter = keep.iter().peekable();
        pop = pool
            .into_iter()
            .enumerate()
            .filter_map(|(i, c)| {
                if keep_iter.peek() == Some(&&i) {
                    keep_iter.next();
                    Some(c)
                } else {
                    None
                }
            })
            .collect();
        tracer.population(generation, &pop.iter().map(|c| c.effective(x_star)).collect::<Vec<_>>());

        if let Some(patience) = config.early_stop_patience {
            let trace = archive.hv_trace();
            if trace[generation] > trace[generation - 1] {
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }

    let counterfactuals = archive.counterfactual_set();
    Ok(MocResult {
        archive,
        counterfactuals,
        x_star_prediction,
        probabilities,
        final_population: pop,
    })
}
