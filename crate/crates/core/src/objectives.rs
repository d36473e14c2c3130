//! The four counterfactual objectives and the hypervolume reference point.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{gower_distance, DataPoint, ObservedDataset, Value};
use crate::model::PredictionModel;

/// Desired outcome set: a single value or an interval with optionally open
/// endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesiredOutcome {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub lower_open: bool,
    #[serde(default)]
    pub upper_open: bool,
}

impl DesiredOutcome {
    pub fn closed(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, false, false)
    }

    pub fn value(v: f64) -> Result<Self> {
        Self::closed(v, v)
    }

    pub fn new(lower: f64, upper: f64, lower_open: bool, upper_open: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::ConfigInvalid(format!("invalid target [{lower}, {upper}]")));
        }
        if lower == upper && (lower_open || upper_open) {
            return Err(Error::ConfigInvalid("a single-value target cannot be open".into()));
        }
        Ok(DesiredOutcome {
            lower,
            upper,
            lower_open,
            upper_open,
        })
    }

    /// `]0.5, 1]` when the instance is predicted at or below 0.5,
    /// `[0, 0.5]` otherwise.
    pub fn opposite_class(prediction: f64) -> Self {
        if prediction <= 0.5 {
            DesiredOutcome {
                lower: 0.5,
                upper: 1.0,
                lower_open: true,
                upper_open: false,
            }
        } else {
            DesiredOutcome {
                lower: 0.0,
                upper: 0.5,
                lower_open: false,
                upper_open: false,
            }
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lower_open {
            y > self.lower
        } else {
            y >= self.lower
        };
        let below = if self.upper_open {
            y < self.upper
        } else {
            y <= self.upper
        };
        above && below
    }
}

impl fmt::Display for DesiredOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lower == self.upper {
            return write!(f, "{}", self.lower);
        }
        let l = if self.lower_open { "(" } else { "" };
        let u = if self.upper_open { ")" } else { "" };
        write!(f, "{l}{}:{}{u}", self.lower, self.upper)
    }
}

/// Parses `a:b`, where a leading `(` or trailing `)` opens that endpoint
/// (`[` and `]` are accepted as explicit closed markers), or a single value.
impl FromStr for DesiredOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::ConfigInvalid(format!("cannot parse target `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match s.split_once(':') {
            None => Self::value(num(s)?),
            Some((lo, hi)) => {
                let lo = lo.trim();
                let hi = hi.trim();
                let (lower_open, lo) = match lo.as_bytes().first() {
                    Some(b'(') => (true, &lo[1..]),
                    Some(b'[') => (false, &lo[1..]),
                    _ => (false, lo),
                };
                let (upper_open, hi) = match hi.as_bytes().last() {
                    Some(b')') => (true, &hi[..hi.len() - 1]),
                    Some(b']') => (false, &hi[..hi.len() - 1]),
                    _ => (false, hi),
                };
                Self::new(num(lo)?, num(hi)?, lower_open, upper_open)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub o1: f64,
    pub o2: f64,
    pub o3: usize,
    pub o4: f64,
}

impl ObjectiveVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.o1, self.o2, self.o3 as f64, self.o4]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint(pub [f64; 4]);

/// Distance from a prediction to the target set; zero exactly on members.
///
/// Outside the set this is the distance to the nearer endpoint of its
/// closure. A prediction sitting on an open endpoint is not a member, so it
/// gets the smallest positive distance instead of zero.
pub fn o1_target_distance(prediction: f64, target: &DesiredOutcome) -> f64 {
    if target.contains(prediction) {
        0.0
    } else if prediction < target.lower {
        target.lower - prediction
    } else if prediction > target.upper {
        prediction - target.upper
    } else {
        f64::MIN_POSITIVE
    }
}

pub fn o2_proximity(x: &DataPoint, x_star: &DataPoint, ranges: &[f64]) -> f64 {
    gower_distance(x, x_star, ranges)
}

fn same_value(a: Value, b: Value) -> bool {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => {
            x == y || (x - y).abs() <= SPARSITY_RTOL * x.abs().max(y.abs())
        }
        (Value::Level(x), Value::Level(y)) => x == y,
        _ => false,
    }
}

/// Relative tolerance under which two numeric values count as unchanged.
pub const SPARSITY_RTOL: f64 = 1e-12;

/// Number of features that differ from `x_star`.
pub fn o3_sparsity(x: &DataPoint, x_star: &DataPoint) -> usize {
    x.values()
        .iter()
        .zip(x_star.values())
        .filter(|(&a, &b)| !same_value(a, b))
        .count()
}

/// Weighted Gower distance to the `k` nearest observed rows. Ties in the
/// neighbor ranking go to the lower row index.
pub fn o4_plausibility(
    x: &DataPoint,
    observed: &ObservedDataset,
    k: usize,
    weights: &[f64],
) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_neighbors(observed.len(), k, weights)?;
    let ranges = observed.gower_ranges();
    let rows = observed.rows();
    if k == 1 {
        let best = rows
            .iter()
            .map(|r| gower_distance(x, r, ranges))
            .fold(f64::INFINITY, f64::min);
        return Ok(best);
    }
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (gower_distance(x, r, ranges), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(d.iter().zip(weights).map(|((di, _), w)| di * w).sum())
}

fn check_neighbors(n: usize, k: usize, weights: &[f64]) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::ConfigInvalid(format!(
            "k = {k} neighbors requested from {n} observed rows"
        )));
    }
    if weights.len() != k {
        return Err(Error::ConfigInvalid(format!("{} weights for k = {k}", weights.len())));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::ConfigInvalid("neighbor weights must be non-negative and sum to 1".into()));
    }
    Ok(())
}

pub fn uniform_weights(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Everything the objectives need besides the candidate itself.
pub struct EvalContext<'a> {
    pub model: &'a dyn PredictionModel,
    pub x_star: &'a DataPoint,
    pub target: DesiredOutcome,
    pub observed: &'a ObservedDataset,
    pub k: usize,
    pub weights: Vec<f64>,
}

impl<'a> EvalContext<'a> {
    pub fn new(
        model: &'a dyn PredictionModel,
        x_star: &'a DataPoint,
        target: DesiredOutcome,
        observed: &'a ObservedDataset,
        k: usize,
    ) -> Result<Self> {
        let weights = uniform_weights(k.max(1));
        check_neighbors(observed.len(), k, &weights)?;
        Ok(EvalContext {
            model,
            x_star,
            target,
            observed,
            k,
            weights,
        })
    }

    /// Objectives given an already computed prediction.
    pub fn objectives_for(&self, x: &DataPoint, prediction: f64) -> Result<ObjectiveVector> {
        Ok(ObjectiveVector {
            o1: o1_target_distance(prediction, &self.target),
            o2: o2_proximity(x, self.x_star, self.observed.gower_ranges()),
            o3: o3_sparsity(x, self.x_star),
            o4: o4_plausibility(x, self.observed, self.k, &self.weights)?,
        })
    }

    /// One model call for the whole batch; the distance objectives are
    /// computed in parallel.
    pub fn evaluate_batch(&self, xs: &[DataPoint]) -> Result<Vec<(f64, ObjectiveVector)>> {
        let preds = self.model.predict_batch(xs)?;
        xs.par_iter()
            .zip(preds.par_iter())
            .map(|(x, &y)| Ok((y, self.objectives_for(x, y)?)))
            .collect()
    }

    pub fn reference_point(&self) -> Result<ReferencePoint> {
        let y = self.model.predict(self.x_star)?;
        Ok(reference_point(y, &self.target, self.x_star.len()))
    }
}

pub fn evaluate_objectives(x: &DataPoint, ctx: &EvalContext<'_>) -> Result<(f64, ObjectiveVector)> {
    let y = ctx.model.predict(x)?;
    Ok((y, ctx.objectives_for(x, y)?))
}

/// `(o1(f(x*)), 1, p, 1)`, the worst value of each objective.
pub fn reference_point(prediction_x_star: f64, target: &DesiredOutcome, p: usize) -> ReferencePoint {
    ReferencePoint([o1_target_distance(prediction_x_star, target), 1.0, p as f64, 1.0])
}
