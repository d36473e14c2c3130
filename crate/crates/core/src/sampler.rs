//! Per-feature conditional samplers backing the conditional mutator.
//!
//! For every feature a shallow partition tree is fit that predicts the
//! feature from all the others; each leaf keeps the observed values of the
//! feature that fell into it. Sampling routes the context down the tree and
//! draws uniformly from the leaf pool, so every draw is an observed value.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{DataPoint, ObservedDataset, Value};
use crate::tree::{fit_tree, Target, Tree, TreeParams};

pub const DEFAULT_MAX_DEPTH: usize = 3;

/// `max(10, n / 20)`, capped at `n` so small datasets still get one leaf.
pub fn default_min_leaf(n: usize) -> usize {
    (n / 20).max(10).min(n.max(1))
}

#[derive(Clone, Debug, Serialize)]
struct FeatureTree {
    tree: Tree,
    #[serde(serialize_with = "serialize_pools")]
    pools: Vec<Vec<Value>>,
}

fn serialize_pools<S: serde::Serializer>(pools: &[Vec<Value>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(pools.len()))?;
    for pool in pools {
        let vals: Vec<f64> = pool
            .iter()
            .map(|v| match *v {
                Value::Num(x) => x,
                Value::Level(l) => f64::from(l),
            })
            .collect();
        seq.serialize_element(&vals)?;
    }
    seq.end()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionalSampler {
    features: Vec<FeatureTree>,
}

pub fn fit_samplers(
    observed: &ObservedDataset,
    max_depth: usize,
    min_leaf: usize,
) -> Result<ConditionalSampler> {
    let n = observed.len();
    if n < min_leaf.max(1) {
        return Err(Error::DatasetTooSmall {
            rows: n,
            required: min_leaf,
        });
    }
    let p = observed.schema().p();
    let data = observed.rows();
    let rows: Vec<usize> = (0..n).collect();
    let params = TreeParams { max_depth, min_leaf };
    let features = (0..p)
        .map(|j| {
            let predictors: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let target = match data[0].get(j) {
                Value::Num(_) => Target::Numeric(data.iter().filter_map(|x| x.get(j).as_num()).collect()),
                Value::Level(_) => Target::Classes {
                    labels: data.iter().filter_map(|x| x.get(j).as_level()).collect(),
                    n_classes: observed.schema().feature(j).levels().len(),
                },
            };
            let (tree, leaves) = fit_tree(data, &rows, &predictors, &target, params);
            let pools = leaves
                .iter()
                .map(|members| members.iter().map(|&i| data[i].get(j)).collect())
                .collect();
            FeatureTree { tree, pools }
        })
        .collect();
    Ok(ConditionalSampler { features })
}

impl ConditionalSampler {
    pub fn fit_default(observed: &ObservedDataset) -> Result<Self> {
        fit_samplers(observed, DEFAULT_MAX_DEPTH, default_min_leaf(observed.len()))
    }

    pub fn p(&self) -> usize {
        self.features.len()
    }

    pub fn tree(&self, j: usize) -> &Tree {
        &self.features[j].tree
    }

    /// Observed values of feature `j` in the leaf `context` falls into.
    /// The context's own value of `j` is never consulted.
    pub fn leaf_pool(&self, j: usize, context: &DataPoint) -> &[Value] {
        let ft = &self.features[j];
        &ft.pools[ft.tree.leaf_of(context)]
    }

    pub fn sample_conditional<R: Rng + ?Sized>(&self, j: usize, context: &DataPoint, rng: &mut R) -> Value {
        let pool = self.leaf_pool(j, context);
        pool[rng.random_range(0..pool.len())]
    }

    /// Tree structure and leaf pools as JSON, for debugging.
    pub fn dump_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
