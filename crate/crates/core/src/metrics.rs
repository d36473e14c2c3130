//! Domination, hypervolume, coverage rate and counterfactual-set truncation.

use std::collections::BTreeMap;
use std::ops::Bound;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveVector, ReferencePoint};

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    dominates_arr(&a.as_array(), &b.as_array())
}

pub(crate) fn dominates_arr<const D: usize>(a: &[f64; D], b: &[f64; D]) -> bool {
    let mut strict = false;
    for k in 0..D {
        if a[k] > b[k] {
            return false;
        }
        if a[k] < b[k] {
            strict = true;
        }
    }
    strict
}

/// Indices of the members not dominated by any other member.
pub fn nondominated_indices(points: &[ObjectiveVector]) -> Vec<usize> {
    let arr: Vec<[f64; 4]> = points.iter().map(ObjectiveVector::as_array).collect();
    (0..arr.len())
        .filter(|&i| !arr.iter().any(|q| dominates_arr(q, &arr[i])))
        .collect()
}

/// Dominated hypervolume of `points` with respect to `reference`.
/// Coordinates beyond the reference are clipped to it first.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ReferencePoint) -> f64 {
    let pts: Vec<[f64; 4]> = points.iter().map(ObjectiveVector::as_array).collect();
    hypervolume_4d(&pts, &reference.0)
}

pub fn hypervolume_4d(points: &[[f64; 4]], reference: &[f64; 4]) -> f64 {
    let mut pts: Vec<[f64; 4]> = points
        .iter()
        .map(|p| std::array::from_fn(|k| p[k].min(reference[k])))
        .filter(|p: &[f64; 4]| (0..4).all(|k| p[k] < reference[k]))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a[3].total_cmp(&b[3]));
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let next = pts.get(i + 1).map_or(reference[3], |p| p[3]);
        let depth = next - pts[i][3];
        if depth > 0.0 {
            let slice: Vec<[f64; 3]> = pts[..=i].iter().map(|p| [p[0], p[1], p[2]]).collect();
            volume += hypervolume_3d(&slice, &[reference[0], reference[1], reference[2]]) * depth;
        }
    }
    volume
}

/// Sweep along the third axis over a 2-D staircase.
pub fn hypervolume_3d(points: &[[f64; 3]], reference: &[f64; 3]) -> f64 {
    let mut pts: Vec<[f64; 3]> = points
        .iter()
        .filter(|p| (0..3).all(|k| p[k] < reference[k]))
        .copied()
        .collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stairs = Staircase::new(reference[0], reference[1]);
    let mut volume = 0.0;
    for i in 0..pts.len() {
        stairs.insert(pts[i][0], pts[i][1]);
        let next = pts.get(i + 1).map_or(reference[2], |p| p[2]);
        volume += stairs.area * (next - pts[i][2]);
    }
    volume
}

/// Nondominated 2-D point set (x ascending, y descending) with its
/// dominated area maintained incrementally.
struct Staircase {
    steps: BTreeMap<OrderedFloat<f64>, f64>,
    area: f64,
    rx: f64,
    ry: f64,
}

impl Staircase {
    fn new(rx: f64, ry: f64) -> Self {
        Staircase {
            steps: BTreeMap::new(),
            area: 0.0,
            rx,
            ry,
        }
    }

    fn insert(&mut self, x: f64, y: f64) {
        if x >= self.rx || y >= self.ry {
            return;
        }
        let key = OrderedFloat(x);
        let h0 = self
            .steps
            .range(..=key)
            .next_back()
            .map_or(self.ry, |(_, &hy)| hy);
        if h0 <= y {
            return;
        }
        let mut added = 0.0;
        let mut cur = x;
        let mut h = h0;
        let mut covered = false;
        let mut removed = Vec::new();
        for (&k, &ky) in self.steps.range((Bound::Excluded(key), Bound::Unbounded)) {
            added += (k.0 - cur) * (h - y);
            if ky <= y {
                covered = true;
                break;
            }
            removed.push(k);
            cur = k.0;
            h = ky;
        }
        if !covered {
            added += (self.rx - cur) * (h - y);
        }
        for k in removed {
            self.steps.remove(&k);
        }
        self.steps.insert(key, y);
        self.area += added;
    }
}

/// Fraction of `theirs` dominated by at least one member of `ours`.
pub fn coverage_rate(ours: &[ObjectiveVector], theirs: &[ObjectiveVector]) -> Result<f64> {
    if theirs.is_empty() {
        return Err(Error::EmptyComparisonSet);
    }
    let covered = theirs
        .iter()
        .filter(|t| ours.iter().any(|o| dominates(o, t)))
        .count();
    Ok(covered as f64 / theirs.len() as f64)
}

/// Greedy selection of at most `limit` members by marginal hypervolume
/// contribution, exhausting the target-attaining members first. Ties go to
/// the lower index. Returns selected indices in ascending order.
pub fn truncate_counterfactuals(
    objectives: &[ObjectiveVector],
    attains: &[bool],
    limit: usize,
    reference: &ReferencePoint,
) -> Vec<usize> {
    assert_eq!(objectives.len(), attains.len());
    let n = objectives.len();
    if n <= limit {
        return (0..n).collect();
    }
    let pts: Vec<[f64; 4]> = objectives.iter().map(ObjectiveVector::as_array).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(limit);
    let mut chosen_pts: Vec<[f64; 4]> = Vec::with_capacity(limit);
    let mut base = 0.0;
    for tier in [true, false] {
        let mut pool: Vec<usize> = (0..n).filter(|&i| attains[i] == tier).collect();
        while chosen.len() < limit && !pool.is_empty() {
            let mut best = (0usize, f64::NEG_INFINITY, 0.0);
            for (slot, &i) in pool.iter().enumerate() {
                chosen_pts.push(pts[i]);
                let hv = hypervolume_4d(&chosen_pts, &reference.0);
                chosen_pts.pop();
                let gain = hv - base;
                if gain > best.1 {
                    best = (slot, gain, hv);
                }
            }
            let i = pool.remove(best.0);
            chosen.push(i);
            chosen_pts.push(pts[i]);
            base = best.2;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Ranks with ties sharing their mid-rank; the largest value gets rank `n`.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// One-sided exact sign test: probability of at least `wins` successes in
/// `wins + losses` fair coin flips. Ties are expected to be dropped.
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let mut p = 0.0;
    let mut coef = 1.0f64;
    let half_n = 0.5f64.powi(n as i32);
    for k in 0..=n {
        if k > 0 {
            coef = coef * (n - k + 1) as f64 / k as f64;
        }
        if k >= wins {
            p += coef * half_n;
        }
    }
    p.min(1.0)
}
