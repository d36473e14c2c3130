//! CART-style partition trees over mixed feature vectors.
//!
//! Numeric predictors split on `value <= threshold`, level predictors on
//! `value == level` (one level versus the rest). Numeric targets use
//! squared-error reduction, categorical targets Gini reduction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::feature::{DataPoint, FeatureSchema, Value};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Split {
    /// Left branch when the numeric value is `<= threshold`.
    Threshold { feature: usize, threshold: f64 },
    /// Left branch when the level equals `level`.
    Level { feature: usize, level: u32 },
}

impl Split {
    pub fn feature(&self) -> usize {
        match *self {
            Split::Threshold { feature, .. } | Split::Level { feature, .. } => feature,
        }
    }

    fn goes_left(&self, x: &DataPoint) -> bool {
        match (*self, x.get(self.feature())) {
            (Split::Threshold { threshold, .. }, Value::Num(v)) => v <= threshold,
            (Split::Level { level, .. }, Value::Level(l)) => l == level,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf { leaf: usize },
    Branch { split: Split, left: usize, right: usize },
}

/// Flat node arena; node 0 is the root, leaves are numbered densely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    n_leaves: usize,
}

impl Tree {
    pub fn leaf_of(&self, x: &DataPoint) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { leaf } => return *leaf,
                Node::Branch { split, left, right } => {
                    at = if split.goes_left(x) { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Branch { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Features used by any split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Branch { split, .. } => Some(split.feature()),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// What the tree predicts.
#[derive(Clone, Debug)]
pub enum Target {
    Numeric(Vec<f64>),
    Classes { labels: Vec<u32>, n_classes: usize },
}

impl Target {
    fn len(&self) -> usize {
        match self {
            Target::Numeric(v) => v.len(),
            Target::Classes { labels, .. } => labels.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

/// Accumulated target statistics of a row set.
#[derive(Clone, Debug)]
enum Stats {
    Numeric { n: f64, sum: f64, sum_sq: f64 },
    Classes { n: f64, counts: Vec<f64> },
}

impl Stats {
    fn empty(target: &Target) -> Self {
        match target {
            Target::Numeric(_) => Stats::Numeric {
                n: 0.0,
                sum: 0.0,
                sum_sq: 0.0,
            },
            Target::Classes { n_classes, .. } => Stats::Classes {
                n: 0.0,
                counts: vec![0.0; *n_classes],
            },
        }
    }

    fn add(&mut self, target: &Target, row: usize, sign: f64) {
        match (self, target) {
            (Stats::Numeric { n, sum, sum_sq }, Target::Numeric(y)) => {
                *n += sign;
                *sum += sign * y[row];
                *sum_sq += sign * y[row] * y[row];
            }
            (Stats::Classes { n, counts }, Target::Classes { labels, .. }) => {
                *n += sign;
                counts[labels[row] as usize] += sign;
            }
            _ => unreachable!("stats and target kinds agree"),
        }
    }

    fn n(&self) -> f64 {
        match self {
            Stats::Numeric { n, .. } | Stats::Classes { n, .. } => *n,
        }
    }

    /// Size-weighted impurity: SSE, or n times the Gini index.
    fn impurity(&self) -> f64 {
        match self {
            Stats::Numeric { n, sum, sum_sq } => {
                if *n <= 0.0 {
                    0.0
                } else {
                    (sum_sq - sum * sum / n).max(0.0)
                }
            }
            Stats::Classes { n, counts } => {
                if *n <= 0.0 {
                    0.0
                } else {
                    n - counts.iter().map(|c| c * c).sum::<f64>() / n
                }
            }
        }
    }

    fn of(target: &Target, rows: &[usize]) -> Self {
        let mut s = Stats::empty(target);
        for &r in rows {
            s.add(target, r, 1.0);
        }
        s
    }
}

const MIN_GAIN: f64 = 1e-12;

/// Fits a tree on `rows` (indices into `data`, duplicates allowed) using
/// only the listed predictor features. Returns the tree and the member rows
/// of every leaf.
pub fn fit_tree(
    data: &[DataPoint],
    rows: &[usize],
    predictors: &[usize],
    target: &Target,
    params: TreeParams,
) -> (Tree, Vec<Vec<usize>>) {
    debug_assert!(rows.iter().all(|&r| r < target.len()));
    let mut nodes = Vec::new();
    let mut leaves = Vec::new();
    grow(data, rows.to_vec(), predictors, target, params, 0, &mut nodes, &mut leaves);
    let n_leaves = leaves.len();
    (Tree { nodes, n_leaves }, leaves)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    data: &[DataPoint],
    rows: Vec<usize>,
    predictors: &[usize],
    target: &Target,
    params: TreeParams,
    depth: usize,
    nodes: &mut Vec<Node>,
    leaves: &mut Vec<Vec<usize>>,
) -> usize {
    let at = nodes.len();
    nodes.push(Node::Leaf { leaf: usize::MAX });
    let split = if depth < params.max_depth {
        best_split(data, &rows, predictors, target, params.min_leaf)
    } else {
        None
    };
    match split {
        None => {
            nodes[at] = Node::Leaf { leaf: leaves.len() };
            leaves.push(rows);
        }
        Some(split) => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| split.goes_left(&data[i]));
            let left = grow(data, l, predictors, target, params, depth + 1, nodes, leaves);
            let right = grow(data, r, predictors, target, params, depth + 1, nodes, leaves);
            nodes[at] = Node::Branch { split, left, right };
        }
    }
    at
}

fn best_split(
    data: &[DataPoint],
    rows: &[usize],
    predictors: &[usize],
    target: &Target,
    min_leaf: usize,
) -> Option<Split> {
    let min_leaf = min_leaf.max(1) as f64;
    if (rows.len() as f64) < 2.0 * min_leaf {
        return None;
    }
    let total = Stats::of(target, rows);
    let parent = total.impurity();
    if parent <= MIN_GAIN {
        return None;
    }
    let mut best: Option<(f64, Split)> = None;
    let mut consider = |gain: f64, split: Split| {
        if gain > MIN_GAIN && best.as_ref().is_none_or(|(g, _)| gain > *g) {
            best = Some((gain, split));
        }
    };
    for &j in predictors {
        match data[rows[0]].get(j) {
            Value::Num(_) => {
                let mut sorted: Vec<(f64, usize)> = rows
                    .iter()
                    .map(|&i| (data[i].get(j).as_num().unwrap_or(f64::NAN), i))
                    .collect();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut left = Stats::empty(target);
                let mut right = total.clone();
                for k in 0..sorted.len() - 1 {
                    left.add(target, sorted[k].1, 1.0);
                    right.add(target, sorted[k].1, -1.0);
                    let (v, next) = (sorted[k].0, sorted[k + 1].0);
                    if v == next || left.n() < min_leaf || right.n() < min_leaf {
                        continue;
                    }
                    let gain = parent - left.impurity() - right.impurity();
                    consider(gain, Split::Threshold {
                        feature: j,
                        threshold: v + (next - v) / 2.0,
                    });
                }
            }
            Value::Level(_) => {
                let mut levels: Vec<u32> = rows.iter().filter_map(|&i| data[i].get(j).as_level()).collect();
                levels.sort_unstable();
                levels.dedup();
                if levels.len() < 2 {
                    continue;
                }
                for &level in &levels {
                    let members: Vec<usize> = rows
                        .iter()
                        .copied()
                        .filter(|&i| data[i].get(j) == Value::Level(level))
                        .collect();
                    let left = Stats::of(target, &members);
                    let mut right = total.clone();
                    for &i in &members {
                        right.add(target, i, -1.0);
                    }
                    if left.n() < min_leaf || right.n() < min_leaf {
                        continue;
                    }
                    let gain = parent - left.impurity() - right.impurity();
                    consider(gain, Split::Level { feature: j, level });
                }
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Bagged regression trees whose prediction is the mean of leaf means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub schema: FeatureSchema,
    pub trees: Vec<Tree>,
    pub leaf_values: Vec<Vec<f64>>,
}

impl RegressionForest {
    pub fn fit<R: Rng + ?Sized>(
        schema: FeatureSchema,
        data: &[DataPoint],
        y: &[f64],
        n_trees: usize,
        params: TreeParams,
        rng: &mut R,
    ) -> Self {
        let predictors: Vec<usize> = (0..schema.p()).collect();
        let target = Target::Numeric(y.to_vec());
        let mut trees = Vec::with_capacity(n_trees);
        let mut leaf_values = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let rows: Vec<usize> = (0..data.len()).map(|_| rng.random_range(0..data.len())).collect();
            let (tree, leaves) = fit_tree(data, &rows, &predictors, &target, params);
            leaf_values.push(
                leaves
                    .iter()
                    .map(|m| m.iter().map(|&i| y[i]).sum::<f64>() / m.len() as f64)
                    .collect(),
            );
            trees.push(tree);
        }
        RegressionForest {
            schema,
            trees,
            leaf_values,
        }
    }

    pub fn predict_one(&self, x: &DataPoint) -> f64 {
        let sum: f64 = self
            .trees
            .iter()
            .zip(&self.leaf_values)
            .map(|(t, v)| v[t.leaf_of(x)])
            .sum();
        sum / self.trees.len() as f64
    }
}

impl crate::model::PredictionModel for RegressionForest {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, crate::error::ModelError> {
        Ok(batch.iter().map(|x| self.predict_one(x)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::FeatureDescriptor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pts(rows: &[(f64, u32)]) -> Vec<DataPoint> {
        rows.iter()
            .map(|&(a, c)| DataPoint::new(vec![Value::Num(a), Value::Level(c)]))
            .collect()
    }

    #[test]
    fn numeric_split_separates_step_function() {
        let data = pts(&(0..40).map(|i| (i as f64, 0)).collect::<Vec<_>>());
        let y: Vec<f64> = (0..40).map(|i| if i < 25 { 1.0 } else { 5.0 }).collect();
        let rows: Vec<usize> = (0..40).collect();
        let params = TreeParams { max_depth: 3, min_leaf: 5 };
        let (tree, leaves) = fit_tree(&data, &rows, &[0, 1], &Target::Numeric(y), params);
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.nodes()[0], Node::Branch {
            split: Split::Threshold { feature: 0, threshold: 24.5 },
            left: 1,
            right: 2,
        });
        assert_eq!(leaves[0].len(), 25);
    }

    #[test]
    fn level_split_for_class_target() {
        let data = pts(&(0..30).map(|i| (0.0, (i % 3) as u32)).collect::<Vec<_>>());
        let labels: Vec<u32> = (0..30).map(|i| u32::from(i % 3 == 2)).collect();
        let rows: Vec<usize> = (0..30).collect();
        let target = Target::Classes { labels, n_classes: 2 };
        let (tree, leaves) = fit_tree(&data, &rows, &[0, 1], &target, TreeParams { max_depth: 2, min_leaf: 1 });
        assert_eq!(tree.split_features(), vec![1]);
        assert_eq!(leaves.len(), 2);
        for x in &data {
            let leaf = tree.leaf_of(x);
            let pure = leaves[leaf].iter().all(|&i| (i % 3 == 2) == (x.get(1) == Value::Level(2)));
            assert!(pure);
        }
    }

    #[test]
    fn depth_zero_and_min_leaf_stop_growth() {
        let data = pts(&(0..20).map(|i| (i as f64, 0)).collect::<Vec<_>>());
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let rows: Vec<usize> = (0..20).collect();
        let t = Target::Numeric(y);
        let (tree, _) = fit_tree(&data, &rows, &[0], &t, TreeParams { max_depth: 0, min_leaf: 1 });
        assert_eq!(tree.n_leaves(), 1);
        let (tree, _) = fit_tree(&data, &rows, &[0], &t, TreeParams { max_depth: 5, min_leaf: 20 });
        assert_eq!(tree.n_leaves(), 1);
        let (tree, leaves) = fit_tree(&data, &rows, &[0], &t, TreeParams { max_depth: 5, min_leaf: 3 });
        assert!(tree.depth() <= 5);
        assert!(leaves.iter().all(|l| l.len() >= 3));
    }

    #[test]
    fn forest_tracks_a_step() {
        let schema = FeatureSchema::new(vec![
            FeatureDescriptor::numerical("a", 0.0, 100.0).unwrap(),
            FeatureDescriptor::categorical("c", ["x", "y"]).unwrap(),
        ])
        .unwrap();
        let data = pts(&(0..100).map(|i| (i as f64, (i % 2) as u32)).collect::<Vec<_>>());
        let y: Vec<f64> = (0..100).map(|i| if i < 50 { 0.1 } else { 0.9 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = RegressionForest::fit(schema, &data, &y, 10, TreeParams { max_depth: 3, min_leaf: 5 }, &mut rng);
        assert!(f.predict_one(&data[5]) < 0.3);
        assert!(f.predict_one(&data[95]) > 0.7);
        let json = serde_json::to_string(&f).unwrap();
        let back: RegressionForest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.predict_one(&data[40]), f.predict_one(&data[40]));
    }
}
