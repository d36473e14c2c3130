//! Initialization and the mixed-integer variation operators.
//!
//! Draw order (fixed, so archives are reproducible from the seed):
//! - initialization: per candidate, per actionable feature: one mask coin,
//!   then one value draw.
//! - recombination: one pair coin; if the pair recombines, per feature one
//!   gene coin (plus one SBX draw for numeric genes that recombine), then
//!   per feature one mask coin.
//! - mutation: one candidate coin; if it mutates, per feature one gene coin
//!   and one value draw for genes that mutate (the conditional mutator first
//!   shuffles the feature order), then per feature one mask coin.
//!
//! Frozen features consume no draws.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Candidate, EvolutionConfig, Tracer};
use crate::feature::{DataPoint, FeatureKind, FeatureSchema, ObservedDataset, Value};
use crate::objectives::ObjectiveVector;
use crate::sampler::ConditionalSampler;

/// Linear map of ICE standard deviations onto `[p_min, p_max]`. All equal
/// sigmas map to the midpoint.
pub fn init_probabilities(sigmas: &[f64], p_min: f64, p_max: f64) -> Vec<f64> {
    let lo = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sigmas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // also catches NaN sigmas
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![(p_min + p_max) / 2.0; sigmas.len()];
    }
    sigmas
        .iter()
        .map(|s| (s - lo) * (p_max - p_min) / (hi - lo) + p_min)
        .collect()
}

/// Interval numeric genes are drawn from at initialization: the observed
/// range intersected with the capping bounds.
pub(crate) fn sampling_interval(schema: &FeatureSchema, observed: &ObservedDataset, j: usize) -> (f64, f64) {
    let cap = schema.feature(j).capping_bounds().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    match observed.derived_ranges()[j] {
        Some((lo, hi)) => {
            let (a, b) = (lo.max(cap.0), hi.min(cap.1));
            if a <= b {
                (a, b)
            } else {
                cap
            }
        }
        None => cap,
    }
}

fn sample_uniform<R: Rng + ?Sized>(
    schema: &FeatureSchema,
    observed: &ObservedDataset,
    j: usize,
    rng: &mut R,
) -> Value {
    let f = schema.feature(j);
    match f.kind() {
        FeatureKind::Numerical => {
            let (lo, hi) = sampling_interval(schema, observed, j);
            let u: f64 = rng.random();
            Value::Num(lo + u * (hi - lo))
        }
        FeatureKind::Integer => {
            let (lo, hi) = sampling_interval(schema, observed, j);
            let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
            let v = if a <= b { rng.random_range(a..=b) } else { a };
            f.clamp(Value::Num(v as f64))
        }
        FeatureKind::Categorical | FeatureKind::Binary => {
            Value::Level(rng.random_range(0..f.levels().len() as u32))
        }
    }
}

fn blank(genes: DataPoint, use_original: Vec<bool>, generation_born: usize) -> Candidate {
    Candidate {
        genes,
        use_original,
        prediction: f64::NAN,
        objectives: ObjectiveVector {
            o1: f64::NAN,
            o2: f64::NAN,
            o3: 0,
            o4: f64::NAN,
        },
        generation_born,
    }
}

/// `mu` candidates. Feature `j` is freed (mask false) with probability
/// `probabilities[j]` and every actionable gene gets a uniform draw from its
/// admissible set, so masks freed later have a value to expose.
pub fn initialize_population<R: Rng + ?Sized>(
    x_star: &DataPoint,
    mu: usize,
    schema: &FeatureSchema,
    observed: &ObservedDataset,
    probabilities: &[f64],
    rng: &mut R,
) -> Vec<Candidate> {
    let p = schema.p();
    (0..mu)
        .map(|_| {
            let mut genes = x_star.clone();
            let mut mask = vec![true; p];
            for j in 0..p {
                if !schema.feature(j).actionable() {
                    continue;
                }
                mask[j] = rng.random::<f64>() >= probabilities[j];
                genes.set(j, sample_uniform(schema, observed, j, rng));
            }
            blank(genes, mask, 0)
        })
        .collect()
}

/// SBX children of `a` and `b` for spread factor drawn from `u`. The pair
/// always satisfies `c1 + c2 = a + b`.
pub fn sbx_pair(a: f64, b: f64, u: f64, eta: f64) -> (f64, f64) {
    if a == b {
        // the blend below is exact in theory only
        return (a, b);
    }
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    (
        0.5 * ((1.0 + beta) * a + (1.0 - beta) * b),
        0.5 * ((1.0 - beta) * a + (1.0 + beta) * b),
    )
}

fn clamp_genes(c: &mut Candidate, schema: &FeatureSchema, x_star: &DataPoint) {
    for j in 0..schema.p() {
        let f = schema.feature(j);
        if f.actionable() {
            c.genes.set(j, f.clamp(c.genes.get(j)));
        } else {
            c.genes.set(j, x_star.get(j));
            c.use_original[j] = true;
        }
    }
}

/// Recombines two parents: SBX on numeric genes, uniform crossover on
/// levels, swaps on mask bits. Children come back clamped and unevaluated.
#[allow(clippy::too_many_arguments)]
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &Candidate,
    b: &Candidate,
    config: &EvolutionConfig,
    schema: &FeatureSchema,
    x_star: &DataPoint,
    generation: usize,
    rng: &mut R,
    tracer: &mut dyn Tracer,
) -> (Candidate, Candidate) {
    let mut c1 = blank(a.genes.clone(), a.use_original.clone(), generation);
    let mut c2 = blank(b.genes.clone(), b.use_original.clone(), generation);
    if rng.random::<f64>() >= config.p_rec {
        return (c1, c2);
    }
    let p = schema.p();
    for j in 0..p {
        if !schema.feature(j).actionable() {
            continue;
        }
        match (a.genes.get(j), b.genes.get(j)) {
            (Value::Num(va), Value::Num(vb)) => {
                if rng.random::<f64>() < config.p_rec_gen {
                    let u: f64 = rng.random();
                    let (x1, x2) = sbx_pair(va, vb, u, config.sbx_eta);
                    tracer.sbx(va, vb, x1, x2);
                    c1.genes.set(j, Value::Num(x1));
                    c2.genes.set(j, Value::Num(x2));
                }
            }
            (la, lb) => {
                if rng.random::<f64>() < config.p_rec_gen * 0.5 {
                    c1.genes.set(j, lb);
                    c2.genes.set(j, la);
                }
            }
        }
    }
    for j in 0..p {
        if !schema.feature(j).actionable() {
            continue;
        }
        if rng.random::<f64>() < config.p_rec_use_orig {
            c1.use_original[j] = b.use_original[j];
            c2.use_original[j] = a.use_original[j];
        }
    }
    clamp_genes(&mut c1, schema, x_star);
    clamp_genes(&mut c2, schema, x_star);
    (c1, c2)
}

/// Observed values of the leaf that lie inside the capping bounds; the whole
/// pool when none do.
fn admissible_pool(pool: &[Value], schema: &FeatureSchema, j: usize) -> Vec<Value> {
    let f = schema.feature(j);
    let inside: Vec<Value> = pool.iter().copied().filter(|&v| f.clamp(v) == v).collect();
    if inside.is_empty() {
        pool.to_vec()
    } else {
        inside
    }
}

/// Mutates `c` in place and clears its cached prediction when the
/// candidate-level gate fires.
pub fn mutate<R: Rng + ?Sized>(
    c: &mut Candidate,
    config: &EvolutionConfig,
    observed: &ObservedDataset,
    x_star: &DataPoint,
    sampler: Option<&ConditionalSampler>,
    rng: &mut R,
    tracer: &mut dyn Tracer,
) {
    let schema = observed.schema();
    if rng.random::<f64>() >= config.p_mut {
        return;
    }
    let p = schema.p();
    let mut order: Vec<usize> = (0..p).filter(|&j| schema.feature(j).actionable()).collect();
    match sampler {
        Some(s) => {
            order.shuffle(rng);
            for &j in &order {
                if rng.random::<f64>() >= config.p_mut_gen {
                    continue;
                }
                let context = c.effective(x_star);
                let pool = admissible_pool(s.leaf_pool(j, &context), schema, j);
                let v = pool[rng.random_range(0..pool.len())];
                tracer.conditional_draw(j, v);
                c.genes.set(j, v);
            }
        }
        None => {
            let widths = observed.gower_ranges();
            for &j in &order {
                if rng.random::<f64>() >= config.p_mut_gen {
                    continue;
                }
                let f = schema.feature(j);
                let v = match c.genes.get(j) {
                    Value::Num(x) => {
                        let z: f64 = rng.sample(StandardNormal);
                        Value::Num(x + z * config.mutation_scale * widths[j])
                    }
                    Value::Level(l) => {
                        let n = f.levels().len() as u32;
                        if n < 2 {
                            Value::Level(l)
                        } else if f.kind() == FeatureKind::Binary {
                            Value::Level(1 - l)
                        } else {
                            // uniform over the other levels
                            let k = rng.random_range(0..n - 1);
                            Value::Level(if k >= l { k + 1 } else { k })
                        }
                    }
                };
                c.genes.set(j, v);
            }
        }
    }
    for j in 0..p {
        if !schema.feature(j).actionable() {
            continue;
        }
        if rng.random::<f64>() < config.p_mut_use_orig {
            c.use_original[j] = !c.use_original[j];
        }
    }
    clamp_genes(c, schema, x_star);
    c.prediction = f64::NAN;
}
