//! Writes the fixture datasets and models used by the test suites.
//!
//! Usage: cargo run -p moc-core --example gen_fixtures -- <out-dir>
//!
//! Output (all deterministic):
//! - credit.csv, credit.schema.json, credit.forest.json, credit.model.json
//! - diabetes.csv, diabetes.schema.json, diabetes.model.json

use std::fs;
use std::path::{Path, PathBuf};

use moc_core::model::{EncodedTerm, Link, LinearModel, ModelSpec};
use moc_core::tree::{RegressionForest, TreeParams};
use moc_core::{DataPoint, FeatureDescriptor, FeatureSchema, ObservedDataset, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const CREDIT_ROWS: usize = 522;
const DIABETES_ROWS: usize = 768;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> u32 {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i as u32;
        }
        u -= w;
    }
    weights.len() as u32 - 1
}

fn credit_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureDescriptor::integer("age", 19.0, 75.0).unwrap(),
        FeatureDescriptor::binary("sex", ["female", "male"]).unwrap(),
        FeatureDescriptor::categorical("job", ["unskilled_nonres", "unskilled_res", "skilled", "highly_skilled"]).unwrap(),
        FeatureDescriptor::categorical("housing", ["free", "own", "rent"]).unwrap(),
        FeatureDescriptor::categorical("saving.accounts", ["little", "moderate", "quite_rich", "rich"]).unwrap(),
        FeatureDescriptor::categorical("checking.account", ["little", "moderate", "rich"]).unwrap(),
        FeatureDescriptor::numerical("credit.amount", 250.0, 18424.0).unwrap(),
        FeatureDescriptor::integer("duration", 4.0, 72.0).unwrap(),
        FeatureDescriptor::categorical(
            "purpose",
            ["business", "car", "domestic_appliances", "education", "furniture_equipment", "radio_tv", "repairs", "vacation"],
        )
        .unwrap(),
    ])
    .unwrap()
}

/// Credit applications with a good/bad label. Amount grows with duration
/// and job level, so the features carry conditional structure.
fn credit(rng: &mut ChaCha8Rng) -> (ObservedDataset, Vec<f64>) {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(CREDIT_ROWS);
    let mut labels = Vec::with_capacity(CREDIT_ROWS);
    for i in 0..CREDIT_ROWS {
        let age = (19.0 + (rng.random::<f64>().powf(1.6) * 56.0).round()).min(75.0);
        let sex = pick(rng, &[0.32, 0.68]);
        let job = pick(rng, &[0.03, 0.2, 0.62, 0.15]);
        let housing = if age < 25.0 { pick(rng, &[0.05, 0.45, 0.5]) } else { pick(rng, &[0.12, 0.7, 0.18]) };
        let saving = pick(rng, &[0.6, 0.15, 0.1, 0.15]);
        let checking = pick(rng, &[0.45, 0.45, 0.1]);
        let mut duration: f64 = (6.0 + rng.random::<f64>().powf(1.3) * 54.0 + 3.0 * noise.sample(rng)).round();
        duration = duration.clamp(4.0, 72.0);
        let base = 400.0 + 95.0 * duration * (1.0 + 0.25 * job as f64);
        let mut amount = (base * (0.35 * noise.sample(rng)).exp()).round();
        amount = amount.clamp(250.0, 18424.0);
        // pin the declared extremes so observed ranges match the schema
        if i == 3 {
            amount = 18424.0;
            duration = 72.0;
        }
        if i == 4 {
            amount = 250.0;
            duration = 4.0;
        }
        let purpose = pick(rng, &[0.1, 0.3, 0.02, 0.06, 0.18, 0.27, 0.03, 0.04]);
        let age = match i {
            5 => 19.0,
            6 => 75.0,
            _ => age,
        };
        let z = 0.9 - 0.045 * (duration - 20.0) - 0.00012 * (amount - 3000.0)
            + [0.0, 0.4, 0.9, 1.1][saving as usize]
            + [0.0, 0.5, 1.0][checking as usize]
            + 0.015 * (age - 35.0)
            + if housing == 1 { 0.35 } else { 0.0 };
        labels.push(if rng.random::<f64>() < sigmoid(z) { 1.0 } else { 0.0 });
        rows.push(DataPoint::new(vec![
            Value::Num(age),
            Value::Level(sex),
            Value::Level(job),
            Value::Level(housing),
            Value::Level(saving),
            Value::Level(checking),
            Value::Num(amount),
            Value::Num(duration),
            Value::Level(purpose),
        ]));
    }
    (ObservedDataset::new(credit_schema(), rows).unwrap(), labels)
}

/// Bounds of the usual diabetes benchmark, so that observed ranges (the
/// Gower normalizers) match it exactly.
pub const DIABETES_BOUNDS: [(&str, f64, f64); 8] = [
    ("preg", 0.0, 17.0),
    ("plas", 0.0, 199.0),
    ("pres", 0.0, 122.0),
    ("skin", 0.0, 99.0),
    ("insu", 0.0, 846.0),
    ("mass", 0.0, 67.1),
    ("pedi", 0.078, 2.42),
    ("age", 21.0, 81.0),
];

fn diabetes_schema() -> FeatureSchema {
    FeatureSchema::new(
        DIABETES_BOUNDS
            .iter()
            .map(|&(n, lo, hi)| FeatureDescriptor::numerical(n, lo, hi).unwrap())
            .collect(),
    )
    .unwrap()
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

fn diabetes(rng: &mut ChaCha8Rng) -> ObservedDataset {
    let n = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(DIABETES_ROWS);
    for i in 0..DIABETES_ROWS {
        let age = (21.0 + rng.random::<f64>().powf(1.8) * 60.0).round();
        let preg = (((age - 21.0) / 6.0) * rng.random::<f64>() * 1.4 + 0.5 * n.sample(rng)).round().clamp(0.0, 17.0);
        let plas = (90.0 + 0.6 * (age - 21.0) + 28.0 * n.sample(rng)).round().clamp(40.0, 199.0);
        let pres = (60.0 + 0.3 * (age - 21.0) + 11.0 * n.sample(rng)).round().clamp(24.0, 122.0);
        let mass = round_to((31.0 + 6.5 * n.sample(rng)).clamp(18.0, 67.1), 1);
        let skin = if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            (mass - 5.0 + 7.0 * n.sample(rng)).round().clamp(7.0, 99.0)
        };
        let insu = if rng.random::<f64>() < 0.48 {
            0.0
        } else {
            (1.1 * plas - 20.0 + 70.0 * n.sample(rng)).round().clamp(14.0, 846.0)
        };
        let pedi = round_to((0.47 * (0.55 * n.sample(rng)).exp()).clamp(0.078, 2.42), 3);
        let mut row = [preg, plas, pres, skin, insu, mass, pedi, age];
        // first row is the worked example's instance
        if i == 0 {
            row = [11.0, 120.0, 80.0, 37.0, 150.0, 42.3, 0.78, 48.0];
        }
        // rows 1..=8 pin one lower bound each, rows 9..=16 one upper bound
        if (1..=8).contains(&i) {
            row[i - 1] = DIABETES_BOUNDS[i - 1].1;
        }
        if (9..=16).contains(&i) {
            row[i - 9] = DIABETES_BOUNDS[i - 9].2;
        }
        rows.push(DataPoint::new(row.iter().map(|&v| Value::Num(v)).collect()));
    }
    ObservedDataset::new(diabetes_schema(), rows).unwrap()
}

fn diabetes_model() -> ModelSpec {
    let coefficients = vec![0.123, 0.0352, -0.0133, 0.0006, -0.0012, 0.0897, 0.945, 0.0149];
    let encoding: Vec<EncodedTerm> = DIABETES_BOUNDS
        .iter()
        .map(|&(n, _, _)| EncodedTerm {
            feature: n.to_string(),
            level: None,
        })
        .collect();
    ModelSpec::Linear {
        link: Link::Logistic,
        intercept: -8.4,
        coefficients,
        encoding,
    }
}

fn write_json<T: serde::Serialize>(path: PathBuf, value: &T) {
    let mut s = serde_json::to_string_pretty(value).unwrap();
    s.push('\n');
    fs::write(path, s).unwrap();
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let out = Path::new(&out);
    fs::create_dir_all(out).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(20200917);
    let (credit, labels) = credit(&mut rng);
    credit.write_csv(fs::File::create(out.join("credit.csv")).unwrap()).unwrap();
    write_json(out.join("credit.schema.json"), credit.schema());
    let forest = RegressionForest::fit(
        credit.schema().clone(),
        credit.rows(),
        &labels,
        30,
        TreeParams {
            max_depth: 6,
            min_leaf: 8,
        },
        &mut rng,
    );
    write_json(out.join("credit.forest.json"), &forest);
    write_json(
        out.join("credit.model.json"),
        &ModelSpec::External {
            command: "moco-predict".into(),
            args: vec!["credit.forest.json".into()],
        },
    );

    let diabetes = diabetes(&mut rng);
    diabetes.write_csv(fs::File::create(out.join("diabetes.csv")).unwrap()).unwrap();
    write_json(out.join("diabetes.schema.json"), diabetes.schema());
    let spec = diabetes_model();
    // fail early if the encoding does not fit the schema
    if let ModelSpec::Linear {
        link,
        intercept,
        coefficients,
        encoding,
    } = &spec
    {
        LinearModel::new(diabetes.schema(), *link, *intercept, coefficients.clone(), encoding).unwrap();
    }
    write_json(out.join("diabetes.model.json"), &spec);
    println!("fixtures written to {}", out.display());
}
