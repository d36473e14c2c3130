//! Nondominated sorting, penalization fronts, mixed crowding distance and
//! environmental selection.

use std::cmp::Ordering;

use rand::Rng;

use crate::feature::{DataPoint, Value};
use crate::metrics::dominates_arr;
use crate::objectives::ObjectiveVector;

/// Fast nondominated sort. Each front lists indices in ascending order.
pub fn nondominated_sort(objectives: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let arr: Vec<[f64; 4]> = objectives.iter().map(ObjectiveVector::as_array).collect();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_set: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_arr(&arr[i], &arr[j]) {
                dominates_set[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_arr(&arr[j], &arr[i]) {
                dominates_set[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_set[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Moves every candidate with `o1 > epsilon` out of its front into trailing
/// singleton fronts, smallest violation first (ties by index). Fronts left
/// empty are dropped.
pub fn penalize_violators(
    fronts: Vec<Vec<usize>>,
    objectives: &[ObjectiveVector],
    epsilon: f64,
) -> Vec<Vec<usize>> {
    let violates = |i: usize| objectives[i].o1 > epsilon;
    let mut violators: Vec<usize> = fronts.iter().flatten().copied().filter(|&i| violates(i)).collect();
    if violators.is_empty() {
        return fronts;
    }
    violators.sort_by(|&a, &b| {
        objectives[a]
            .o1
            .total_cmp(&objectives[b].o1)
            .then(a.cmp(&b))
    });
    let mut out: Vec<Vec<usize>> = fronts
        .into_iter()
        .map(|f| f.into_iter().filter(|&i| !violates(i)).collect::<Vec<_>>())
        .filter(|f| !f.is_empty())
        .collect();
    out.extend(violators.into_iter().map(|i| vec![i]));
    out
}

/// Crowding distance of each member of one front: the NSGA-II objective-space
/// term plus a feature-space term built the same way from per-feature Gower
/// gaps, the two added with equal weight.
///
/// Objective term: per objective, boundary members are infinite and interior
/// members add the normalized gap between their sorted neighbors. Objectives
/// constant over the front contribute nothing.
///
/// Feature term: per feature that varies over the front, interior members
/// add the Gower gap between their sorted neighbors (numeric gaps normalized
/// by the front's range of the feature, levels as inequality indicators) and
/// boundary members add 1, the largest possible gap. The sum is divided by
/// the number of features, as in the Gower distance.
pub fn crowding_distance_mixed(objectives: &[ObjectiveVector], points: &[DataPoint]) -> Vec<f64> {
    let n = objectives.len();
    debug_assert_eq!(n, points.len());
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut obj_term = vec![0.0; n];
    let arr: Vec<[f64; 4]> = objectives.iter().map(ObjectiveVector::as_array).collect();
    #[allow(clippy::needless_range_loop)]
    for m in 0..4 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| arr[a][m].total_cmp(&arr[b][m]).then(a.cmp(&b)));
        let lo = arr[order[0]][m];
        let hi = arr[order[n - 1]][m];
        if hi <= lo {
            continue;
        }
        obj_term[order[0]] = f64::INFINITY;
        obj_term[order[n - 1]] = f64::INFINITY;
        for k in 1..n - 1 {
            obj_term[order[k]] += (arr[order[k + 1]][m] - arr[order[k - 1]][m]) / (hi - lo);
        }
    }

    let p = points[0].len();
    let mut feat_term = vec![0.0; n];
    for j in 0..p {
        let key = |i: usize| match points[i].get(j) {
            Value::Num(v) => v,
            Value::Level(l) => f64::from(l),
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        let lo = key(order[0]);
        let hi = key(order[n - 1]);
        if hi <= lo {
            continue;
        }
        let numeric = matches!(points[0].get(j), Value::Num(_));
        feat_term[order[0]] += 1.0;
        feat_term[order[n - 1]] += 1.0;
        for k in 1..n - 1 {
            let (a, b) = (key(order[k - 1]), key(order[k + 1]));
            feat_term[order[k]] += if numeric {
                (b - a) / (hi - lo)
            } else {
                f64::from(u8::from(a != b))
            };
        }
    }
    obj_term
        .iter()
        .zip(&feat_term)
        .map(|(o, f)| o + f / p as f64)
        .collect()
}

/// Front rank and crowding distance of every member of a population.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    pub fronts: Vec<Vec<usize>>,
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

pub fn rank_population(
    objectives: &[ObjectiveVector],
    points: &[DataPoint],
    epsilon: Option<f64>,
) -> Ranking {
    let mut fronts = nondominated_sort(objectives);
    if let Some(eps) = epsilon {
        fronts = penalize_violators(fronts, objectives, eps);
    }
    let n = objectives.len();
    let mut rank = vec![0; n];
    let mut crowding = vec![0.0; n];
    for (r, front) in fronts.iter().enumerate() {
        let objs: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
        let pts: Vec<DataPoint> = front.iter().map(|&i| points[i].clone()).collect();
        let cd = crowding_distance_mixed(&objs, &pts);
        for (&i, c) in front.iter().zip(cd) {
            rank[i] = r;
            crowding[i] = c;
        }
    }
    Ranking {
        fronts,
        rank,
        crowding,
    }
}

/// Environmental selection: whole fronts in order, the splitting front cut
/// by descending crowding distance (ties to the lower index). Returns the
/// surviving indices in ascending order.
pub fn select_survivors(
    objectives: &[ObjectiveVector],
    points: &[DataPoint],
    mu: usize,
    epsilon: Option<f64>,
) -> Vec<usize> {
    let n = objectives.len();
    if n <= mu {
        return (0..n).collect();
    }
    let mut fronts = nondominated_sort(objectives);
    if let Some(eps) = epsilon {
        fronts = penalize_violators(fronts, objectives, eps);
    }
    let mut survivors = Vec::with_capacity(mu);
    for front in fronts {
        let room = mu - survivors.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            survivors.extend(front);
            continue;
        }
        let objs: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
        let pts: Vec<DataPoint> = front.iter().map(|&i| points[i].clone()).collect();
        let cd = crowding_distance_mixed(&objs, &pts);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| match cd[b].partial_cmp(&cd[a]) {
            Some(Ordering::Equal) | None => front[a].cmp(&front[b]),
            Some(o) => o,
        });
        survivors.extend(order.into_iter().take(room).map(|k| front[k]));
    }
    survivors.sort_unstable();
    survivors
}

/// Binary tournament: two uniform draws, lower rank wins, then larger
/// crowding distance, then lower index.
pub fn binary_tournament<R: Rng + ?Sized>(ranking: &Ranking, rng: &mut R) -> usize {
    let n = ranking.rank.len();
    let a = rng.random_range(0..n);
    let b = rng.random_range(0..n);
    let better = |x: usize, y: usize| -> bool {
        match ranking.rank[x].cmp(&ranking.rank[y]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                let (cx, cy) = (ranking.crowding[x], ranking.crowding[y]);
                if cx != cy {
                    cx > cy
                } else {
                    x <= y
                }
            }
        }
    };
    if better(a, b) {
        a
    } else {
        b
    }
}
