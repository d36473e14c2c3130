//! Comparison methods: nearest observed point attaining the target, and
//! random search at the same budget as the evolutionary search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolution::operators::sampling_interval;
use crate::evolution::ParetoArchive;
use crate::feature::{gower_distance, DataPoint, FeatureKind, ObservedDataset, Value};
use crate::model::PredictionModel;
use crate::objectives::{DesiredOutcome, EvalContext};

/// Observed row closest to `x_star` in Gower distance among those whose
/// prediction lies in the target. Returns the row index.
pub fn whatif_nearest(
    x_star: &DataPoint,
    target: &DesiredOutcome,
    model: &dyn PredictionModel,
    observed: &ObservedDataset,
) -> Result<usize> {
    let preds = model.predict_batch(observed.rows())?;
    let ranges = observed.gower_ranges();
    let mut best: Option<(f64, usize)> = None;
    for (i, (x, &y)) in observed.rows().iter().zip(&preds).enumerate() {
        if !target.contains(y) {
            continue;
        }
        let d = gower_distance(x, x_star, ranges);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i).ok_or(Error::NoFeasiblePoint)
}

/// Probability that random search keeps a feature at `x*`.
pub const RANDOM_KEEP_ORIGINAL: f64 = 0.5;

/// `batches` independent batches of `mu` candidates. Each actionable feature
/// keeps its `x*` value on a fair coin and is otherwise drawn uniformly from
/// its observed range (intersected with the capping bounds) or its levels.
/// Batch `g` is recorded as archive generation `g`.
#[allow(clippy::too_many_arguments)]
pub fn random_search(
    x_star: &DataPoint,
    target: &DesiredOutcome,
    model: &dyn PredictionModel,
    observed: &ObservedDataset,
    mu: usize,
    batches: usize,
    k: usize,
    seed: u64,
) -> Result<ParetoArchive> {
    if mu == 0 || batches == 0 {
        return Err(Error::ConfigInvalid("random search needs mu and batches >= 1".into()));
    }
    let schema = observed.schema();
    schema.validate(x_star)?;
    let ctx = EvalContext::new(model, x_star, *target, observed, k)?;
    let mut archive = ParetoArchive::new(ctx.reference_point()?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in 0..batches {
        let batch: Vec<DataPoint> = (0..mu)
            .map(|_| {
                let mut x = x_star.clone();
                for j in 0..schema.p() {
                    let f = schema.feature(j);
                    if !f.actionable() || rng.random::<f64>() < RANDOM_KEEP_ORIGINAL {
                        continue;
                    }
                    let v = match f.kind() {
                        FeatureKind::Categorical | FeatureKind::Binary => {
                            Value::Level(rng.random_range(0..f.levels().len() as u32))
                        }
                        _ => {
                            let (lo, hi) = sampling_interval(schema, observed, j);
                            let u: f64 = rng.random();
                            f.clamp(Value::Num(lo + u * (hi - lo)))
                        }
                    };
                    x.set(j, v);
                }
                x
            })
            .collect();
        let evals = ctx.evaluate_batch(&batch)?;
        archive.record_generation(g, batch.into_iter().zip(evals).map(|(x, (y, o))| (x, y, o)));
    }
    Ok(archive)
}
