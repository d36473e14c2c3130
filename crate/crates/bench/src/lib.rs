//! Input generators shared by the benchmarks.

use moc_core::{DataPoint, FeatureDescriptor, FeatureSchema, ObjectiveVector, ObservedDataset, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` objective vectors spread around a 4-D simplex.
pub fn random_objectives(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
            let s: f64 = w.iter().sum();
            ObjectiveVector {
                o1: w[0] / s,
                o2: w[1] / s,
                o3: (w[2] / s * 8.0).round() as usize,
                o4: w[3] / s,
            }
        })
        .collect()
}

/// Numeric dataset with `p` features in `[0, 1]`.
pub fn random_dataset(rows: usize, p: usize, seed: u64) -> ObservedDataset {
    let schema = FeatureSchema::new(
        (0..p)
            .map(|j| FeatureDescriptor::numerical(format!("x{j}"), 0.0, 1.0).expect("valid feature"))
            .collect(),
    )
    .expect("valid schema");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows)
        .map(|_| DataPoint::new((0..p).map(|_| Value::Num(rng.random::<f64>())).collect()))
        .collect();
    ObservedDataset::new(schema, data).expect("valid dataset")
}
