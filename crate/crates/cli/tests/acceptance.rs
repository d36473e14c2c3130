//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use moc_core::benchmark::{run_instance, InstanceRun, Method};
use moc_core::evolution::selection::nondominated_sort;
use moc_core::evolution::{run_moc_traced, Tracer};
use moc_core::metrics::{coverage_rate, dominates, hypervolume_4d, sign_test_p};
use moc_core::objectives::evaluate_objectives;
use moc_core::{
    load_model, run_moc, DataPoint, DesiredOutcome, EvalContext, EvolutionConfig, FeatureSchema, MocProblem,
    ObjectiveVector, ObservedDataset, PredictionModel, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, ok: bool, name: &str, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn vec4(o: &ObjectiveVector) -> [f64; 4] {
    o.as_array()
}

fn brute_dominates(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Fronts by repeated peeling with exhaustive pairwise comparison.
fn brute_fronts(pool: &[[f64; 4]]) -> Vec<BTreeSet<usize>> {
    let mut left: BTreeSet<usize> = (0..pool.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: BTreeSet<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| brute_dominates(&pool[j], &pool[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn random_objectives(rng: &mut ChaCha8Rng) -> ObjectiveVector {
    // coarse grids so that ties and equal vectors are common
    ObjectiveVector {
        o1: rng.random_range(0..4) as f64 * 0.1,
        o2: rng.random_range(0..5) as f64 * 0.2,
        o3: rng.random_range(0..4),
        o4: rng.random_range(0..5) as f64 * 0.25,
    }
}

fn oracle_equivalence(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pools = 2000;
    let mut mismatches = 0;
    for _ in 0..pools {
        let n = rng.random_range(1..=8);
        let objs: Vec<ObjectiveVector> = (0..n).map(|_| random_objectives(&mut rng)).collect();
        let arr: Vec<[f64; 4]> = objs.iter().map(vec4).collect();
        let got: Vec<BTreeSet<usize>> = nondominated_sort(&objs).into_iter().map(|f| f.into_iter().collect()).collect();
        if got != brute_fronts(&arr) {
            mismatches += 1;
        }
        for i in 0..n {
            for j in 0..n {
                if dominates(&objs[i], &objs[j]) != brute_dominates(&arr[i], &arr[j]) {
                    mismatches += 1;
                }
            }
        }
        if n >= 2 {
            let split = rng.random_range(1..n);
            let (ours, theirs) = objs.split_at(split);
            let covered = theirs.iter().filter(|t| ours.iter().any(|o| brute_dominates(&vec4(o), &vec4(t)))).count();
            let expect = covered as f64 / theirs.len() as f64;
            if coverage_rate(ours, theirs).ok() != Some(expect) {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    r.line(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        "oracle equivalence",
        format!("{pools} pools, {mismatches} mismatches, {:.2}s", elapsed.as_secs_f64()),
    );
}

fn monte_carlo_hv(points: &[[f64; 4]], reference: &[f64; 4], samples: usize, seed: u64) -> f64 {
    let lower: [f64; 4] = std::array::from_fn(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min));
    let volume: f64 = (0..4).map(|k| reference[k] - lower[k]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hit = 0usize;
    for _ in 0..samples {
        let s: [f64; 4] = std::array::from_fn(|k| lower[k] + rng.random::<f64>() * (reference[k] - lower[k]));
        if points.iter().any(|p| (0..4).all(|k| p[k] <= s[k])) {
            hit += 1;
        }
    }
    volume * hit as f64 / samples as f64
}

fn hypervolume_checks(r: &mut Report) {
    let fronts = 60;
    let reference = [1.0, 1.0, 1.0, 1.0];
    let results: Vec<(f64, bool)> = (0..fronts as u64)
        .into_par_iter()
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + f);
            let n = rng.random_range(1..=10);
            // points on a noisy simplex, so most are mutually nondominated
            let pts: Vec<[f64; 4]> = (0..n)
                .map(|_| {
                    let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                    let s: f64 = w.iter().sum();
                    std::array::from_fn(|k| (0.2 + 0.6 * w[k] / s * 2.0).min(0.95))
                })
                .collect();
            let exact = hypervolume_4d(&pts, &reference);
            let mc = monte_carlo_hv(&pts, &reference, 1_000_000, 7 + f);
            let mut monotone = true;
            let mut prev = 0.0;
            for i in 1..=pts.len() {
                let hv = hypervolume_4d(&pts[..i], &reference);
                monotone &= hv >= prev;
                prev = hv;
            }
            ((exact - mc).abs() / exact, monotone)
        })
        .collect();
    let worst = results.iter().map(|x| x.0).fold(0.0, f64::max);
    let monotone = results.iter().all(|x| x.1);
    let single = hypervolume_4d(&[[0.0; 4]], &[0.39, 1.0, 8.0, 1.0]);
    r.line(
        worst < 0.01 && monotone && single == 3.12,
        "hypervolume",
        format!(
            "{fronts} fronts vs 1e6-sample Monte Carlo, worst rel. error {:.4}%, monotone {monotone}, origin box {single}",
            worst * 100.0
        ),
    );
}

fn diabetes() -> (ObservedDataset, Box<dyn PredictionModel>) {
    let data = ObservedDataset::load(fixtures().join("diabetes.csv"), fixtures().join("diabetes.schema.json")).unwrap();
    let model = load_model(fixtures().join("diabetes.model.json"), data.schema()).unwrap();
    (data, model)
}

/// Model file for the credit forest, served by the `moco-predict` binary.
fn credit(dir: &Path) -> (ObservedDataset, PathBuf) {
    let data = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    let spec = serde_json::json!({
        "type": "external",
        "command": env!("CARGO_BIN_EXE_moco-predict"),
        "args": [fixtures().join("credit.forest.json")],
    });
    let path = dir.join("credit.model.json");
    fs::write(&path, spec.to_string()).unwrap();
    (data, path)
}

fn worked_example(r: &mut Report) {
    let (data, model) = diabetes();
    let (x_star, observed) = data.split_off_row(0).unwrap();
    let target: DesiredOutcome = "0:0.5".parse().unwrap();
    let ctx = EvalContext::new(model.as_ref(), &x_star, target, &observed, 1).unwrap();

    // hand computation from the raw rows
    let p = 8;
    let cols: Vec<Vec<f64>> =
        (0..p).map(|j| observed.rows().iter().map(|x| x.get(j).as_num().unwrap()).collect()).collect();
    let ranges: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - c.iter().cloned().fold(f64::INFINITY, f64::min))
        .collect();
    let gower = |a: &[f64], b: &[f64]| (0..p).map(|j| (a[j] - b[j]).abs() / ranges[j]).sum::<f64>() / p as f64;
    let coefs = [0.123, 0.0352, -0.0133, 0.0006, -0.0012, 0.0897, 0.945, 0.0149];
    let x0 = [11.0, 120.0, 80.0, 37.0, 150.0, 42.3, 0.78, 48.0];

    let cands: [([f64; 8], f64, usize); 7] = [
        ([11.0, 27.78, 80.0, 37.0, 150.0, 42.3, 0.78, 48.0], 0.06, 1),
        ([6.35, 3.29, 80.0, 37.0, 150.0, 42.3, 0.78, 41.61], 0.12, 3),
        ([11.0, 79.75, 80.0, 37.0, 17.13, 29.17, 0.31, 44.42], 0.10, 5),
        ([11.0, 94.85, 80.0, 37.0, 150.0, 15.36, 0.78, 48.0], 0.07, 2),
        ([11.0, 79.75, 80.0, 37.0, 40.61, 29.17, 0.17, 48.0], 0.10, 4),
        ([6.35, 3.18, 80.0, 37.0, 150.0, 42.3, 0.78, 48.0], 0.11, 2),
        ([11.0, 57.0, 80.0, 37.0, 150.0, 42.3, 0.78, 28.36], 0.08, 2),
    ];
    let mut worst = 0.0f64;
    let mut rounded_ok = 0;
    let mut single_ok = true;
    for (k, (x, published_o2, published_o3)) in cands.iter().enumerate() {
        let point = DataPoint::new(x.iter().map(|&v| Value::Num(v)).collect());
        let (pred, o) = evaluate_objectives(&point, &ctx).unwrap();
        let z = -8.4 + coefs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>();
        let hand_pred = 1.0 / (1.0 + (-z).exp());
        let hand_o1 = (hand_pred - 0.5).max(0.0);
        let hand_o2 = gower(x, &x0);
        let hand_o3 = (0..p).filter(|&j| x[j] != x0[j]).count();
        let hand_o4 = (0..observed.len())
            .map(|i| gower(x, &cols.iter().map(|c| c[i]).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        worst = worst
            .max((pred - hand_pred).abs())
            .max((o.o1 - hand_o1).abs())
            .max((o.o2 - hand_o2).abs())
            .max((o.o4 - hand_o4).abs());
        if o.o3 != hand_o3 || o.o3 != *published_o3 {
            worst = f64::INFINITY;
        }
        if ((o.o2 * 100.0).round() / 100.0 - published_o2).abs() < 1e-12 {
            rounded_ok += 1;
        }
        if k == 0 {
            // the single change: o2 is one Gower term
            single_ok = (o.o2 - (120.0 - 27.78) / ranges[1] / p as f64).abs() < 1e-9;
        }
    }
    r.line(
        worst < 1e-9 && single_ok && rounded_ok == cands.len(),
        "worked example objectives",
        format!(
            "max deviation from hand computation {worst:.2e}, o2 rounded to 2 decimals matches {rounded_ok}/{}",
            cands.len()
        ),
    );
}

struct Instance {
    run: InstanceRun,
}

fn instance_rows() -> Vec<usize> {
    (0..10).map(|i| 20 + 37 * i).collect()
}

fn ranking_runs(credit_model: &Path) -> (Vec<Instance>, Duration) {
    let start = Instant::now();
    let methods = [Method::MocMod, Method::Moc, Method::MocIce, Method::Random];
    let (diab, diab_model) = diabetes();
    let cred = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    let jobs: Vec<(&'static str, usize)> = ["diabetes", "credit"]
        .into_iter()
        .flat_map(|d| instance_rows().into_iter().map(move |r| (d, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(name, row)| {
            let (data, model) = match name {
                "diabetes" => (&diab, None),
                _ => (&cred, Some(load_model(credit_model, cred.schema()).unwrap())),
            };
            let model: &dyn PredictionModel = model.as_deref().unwrap_or(diab_model.as_ref());
            let pred = model.predict(&data.rows()[row]).unwrap();
            let config = EvolutionConfig {
                seed: 100 + row as u64,
                ..EvolutionConfig::default()
            };
            let run = run_instance(name, model, data, row, DesiredOutcome::opposite_class(pred), &config, &methods)
                .unwrap();
            Instance { run }
        })
        .collect();
    (runs, start.elapsed())
}

fn method_ranking(r: &mut Report, instances: &[Instance], elapsed: Duration) {
    let g = instances[0].run.runs[0].hv_trace().len() - 1;
    let idx = |m: Method| instances[0].run.runs.iter().position(|x| x.method == m).unwrap();
    let (mm, mo, rn) = (idx(Method::MocMod), idx(Method::Moc), idx(Method::Random));
    let mut mean = [0.0; 3];
    for inst in instances {
        let ranks = inst.run.ranks_at(g);
        for (slot, i) in [mm, mo, rn].into_iter().enumerate() {
            mean[slot] += ranks[i] / instances.len() as f64;
        }
    }
    let final_hv = |inst: &Instance, i: usize| *inst.run.runs[i].hv_trace().last().unwrap();
    let sign = |a: usize, b: usize| {
        let wins = instances.iter().filter(|x| final_hv(x, a) > final_hv(x, b)).count();
        let losses = instances.iter().filter(|x| final_hv(x, a) < final_hv(x, b)).count();
        (wins, losses, sign_test_p(wins, losses))
    };
    let (w, l, p) = sign(mm, rn);
    let (w2, l2, p2) = sign(mo, rn);
    r.line(
        mean[0] >= mean[1] && mean[1] >= mean[2] && p < 0.05,
        "method ranking at equal budget",
        format!(
            "{} instances, generation {g}: mean HV rank mocmod {:.3} / moc {:.3} / random {:.3}; \
             sign test mocmod vs random {w}:{l} p={p:.2e} (moc vs random {w2}:{l2} p={p2:.2e}); {:.0}s",
            instances.len(),
            mean[0],
            mean[1],
            mean[2],
            elapsed.as_secs_f64()
        ),
    );
}

fn ice_initialization(r: &mut Report, credit_model: &Path) {
    let (diab, diab_model) = diabetes();
    let cred = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    let trials: Vec<(&str, usize, u64)> = ["diabetes", "credit"]
        .into_iter()
        .flat_map(|d| instance_rows().into_iter().flat_map(move |row| [1u64, 2].map(|s| (d, row, s))))
        .collect();
    let wins: usize = trials
        .par_iter()
        .map(|&(name, row, seed)| {
            let (data, model) = match name {
                "diabetes" => (&diab, None),
                _ => (&cred, Some(load_model(credit_model, cred.schema()).unwrap())),
            };
            let model: &dyn PredictionModel = model.as_deref().unwrap_or(diab_model.as_ref());
            let (x_star, observed) = data.split_off_row(row).unwrap();
            let target = DesiredOutcome::opposite_class(model.predict(&x_star).unwrap());
            let problem = MocProblem {
                model,
                observed: &observed,
                x_star: &x_star,
                target,
                sampler: None,
            };
            let hv0 = |ice| {
                let cfg = EvolutionConfig {
                    generations: 0,
                    use_ice_init: ice,
                    use_conditional_mutator: false,
                    seed,
                    ..EvolutionConfig::default()
                };
                run_moc(&problem, &cfg).unwrap().archive.hv_trace()[0]
            };
            usize::from(hv0(true) >= hv0(false))
        })
        .sum();
    let needed = (0.65 * trials.len() as f64).ceil() as usize;
    r.line(
        wins >= needed,
        "ICE initialization",
        format!("initial HV with ICE init >= random init in {wins}/{} trials (need {needed})", trials.len()),
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

struct SupportCheck<'a> {
    observed: &'a ObservedDataset,
    draws: usize,
    outside: usize,
}

impl Tracer for SupportCheck<'_> {
    fn conditional_draw(&mut self, feature: usize, value: Value) {
        self.draws += 1;
        if !self.observed.rows().iter().any(|x| x.get(feature) == value) {
            self.outside += 1;
        }
    }
}

fn conditional_mutator(r: &mut Report, instances: &[Instance], credit_model: &Path) {
    let idx = |m: Method| instances[0].run.runs.iter().position(|x| x.method == m).unwrap();
    let (with, without) = (idx(Method::MocMod), idx(Method::MocIce));
    let o4 = |inst: &Instance, i: usize| median(inst.run.runs[i].counterfactual_objectives().iter().map(|o| o.o4).collect());
    let closer = instances.iter().filter(|x| o4(x, with) <= o4(x, without)).count();

    let (diab, diab_model) = diabetes();
    let cred = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    let cred_model = load_model(credit_model, cred.schema()).unwrap();
    let mut draws = 0;
    let mut outside = 0;
    for (data, model) in [(&diab, diab_model.as_ref()), (&cred, cred_model.as_ref())] {
        for &row in &instance_rows()[..3] {
            let (x_star, observed) = data.split_off_row(row).unwrap();
            let target = DesiredOutcome::opposite_class(model.predict(&x_star).unwrap());
            let problem = MocProblem {
                model,
                observed: &observed,
                x_star: &x_star,
                target,
                sampler: None,
            };
            let cfg = EvolutionConfig {
                generations: 50,
                seed: row as u64,
                ..EvolutionConfig::default()
            };
            let mut t = SupportCheck {
                observed: &observed,
                draws: 0,
                outside: 0,
            };
            run_moc_traced(&problem, &cfg, &mut t).unwrap();
            draws += t.draws;
            outside += t.outside;
        }
    }
    r.line(
        closer >= 15 && draws > 0 && outside == 0,
        "conditional mutator",
        format!(
            "median o4 with <= without on {closer}/{} instances (need 15); {draws} conditional draws, {outside} outside observed support",
            instances.len()
        ),
    );
}

struct ConstraintCheck<'a> {
    schema: &'a FeatureSchema,
    x_star: &'a DataPoint,
    epsilon: f64,
    frozen_changes: usize,
    out_of_bounds: usize,
    penalized_kept: usize,
}

impl Tracer for ConstraintCheck<'_> {
    fn population(&mut self, _generation: usize, effective: &[DataPoint]) {
        for x in effective {
            for (j, f) in self.schema.features().iter().enumerate() {
                let (v, orig) = (x.get(j), self.x_star.get(j));
                if !f.actionable() && v != orig {
                    self.frozen_changes += 1;
                }
                if let (Some((lo, hi)), Some(n)) = (f.capping_bounds(), v.as_num()) {
                    if v != orig && !(lo..=hi).contains(&n) {
                        self.out_of_bounds += 1;
                    }
                }
                if !f.is_valid(v) && v != orig {
                    self.out_of_bounds += 1;
                }
            }
        }
    }

    /// A penalized member may survive only after every feasible one did.
    fn survivors(&mut self, _generation: usize, pool: &[ObjectiveVector], selected: &[usize]) {
        let feasible = |i: usize| pool[i].o1 <= self.epsilon;
        let any_penalized = selected.iter().any(|&i| !feasible(i));
        if any_penalized {
            let all_feasible_kept = (0..pool.len()).filter(|&i| feasible(i)).all(|i| selected.contains(&i));
            if !all_feasible_kept {
                self.penalized_kept += 1;
            }
        }
    }
}

/// Dataset, model, frozen features and narrowed bounds.
type Setup<'a> = (&'a ObservedDataset, &'a dyn PredictionModel, &'a [&'a str], &'a [(&'a str, f64, f64)]);

fn constraint_invariants(r: &mut Report, instances: &[Instance], credit_model: &Path) {
    let (diab, diab_model) = diabetes();
    let cred = ObservedDataset::load(fixtures().join("credit.csv"), fixtures().join("credit.schema.json")).unwrap();
    let cred_model = load_model(credit_model, cred.schema()).unwrap();
    let setups: [Setup; 2] = [
        (&diab, diab_model.as_ref(), &["age", "preg"], &[("plas", 60.0, 160.0), ("mass", 20.0, 40.0)]),
        (
            &cred,
            cred_model.as_ref(),
            &["age", "sex"],
            &[("credit.amount", 500.0, 10000.0), ("duration", 6.0, 48.0)],
        ),
    ];
    let (mut frozen, mut oob, mut kept, mut runs, mut hv_drops, mut archive_frozen) = (0, 0, 0, 0, 0, 0);
    for (data, model, freeze, bounds) in setups {
        for &row in &instance_rows()[..4] {
            let (x_star, observed) = data.split_off_row(row).unwrap();
            let mut schema = observed.schema().clone();
            schema.freeze(freeze).unwrap();
            for &(n, lo, hi) in bounds {
                schema.set_user_bounds(n, lo, hi).unwrap();
            }
            let observed = observed.with_schema(schema).unwrap();
            let target = DesiredOutcome::opposite_class(model.predict(&x_star).unwrap());
            let problem = MocProblem {
                model,
                observed: &observed,
                x_star: &x_star,
                target,
                sampler: None,
            };
            let cfg = EvolutionConfig {
                generations: 60,
                epsilon: Some(0.0),
                seed: 5 + row as u64,
                ..EvolutionConfig::default()
            };
            let mut t = ConstraintCheck {
                schema: observed.schema(),
                x_star: &x_star,
                epsilon: 0.0,
                frozen_changes: 0,
                out_of_bounds: 0,
                penalized_kept: 0,
            };
            let result = run_moc_traced(&problem, &cfg, &mut t).unwrap();
            frozen += t.frozen_changes;
            oob += t.out_of_bounds;
            kept += t.penalized_kept;
            runs += 1;
            hv_drops += result.archive.hv_trace().windows(2).filter(|w| w[1] < w[0]).count();
            for e in result.archive.entries() {
                for f in freeze {
                    let j = observed.schema().index_of(f).unwrap();
                    if e.point.get(j) != x_star.get(j) {
                        archive_frozen += 1;
                    }
                }
            }
        }
    }
    for inst in instances {
        for run in &inst.run.runs {
            runs += 1;
            hv_drops += run.hv_trace().windows(2).filter(|w| w[1] < w[0]).count();
        }
    }
    r.line(
        frozen + archive_frozen + oob + kept + hv_drops == 0,
        "constraint invariants",
        format!(
            "{runs} runs: {} frozen-feature changes, {oob} out-of-bounds values, \
             {kept} selections keeping penalized over feasible, {hv_drops} HV decreases",
            frozen + archive_frozen
        ),
    );
}

fn explain_once(dir: &Path, out: &str, data: &str, model: &Path, row: &str, target: &str) -> bool {
    let status = Command::new(env!("CARGO_BIN_EXE_moco"))
        .args(["explain", "--data"])
        .arg(fixtures().join(format!("{data}.csv")))
        .arg("--schema")
        .arg(fixtures().join(format!("{data}.schema.json")))
        .arg("--model")
        .arg(model)
        .args(["--row", row, "--target", target, "--generations", "40", "--seed", "9", "--surface"])
        .arg(if data == "diabetes" { "plas,mass,12" } else { "credit.amount,duration,12" })
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    status
}

fn determinism(r: &mut Report, tmp: &Path, credit_model: &Path) {
    let cases = [
        ("diabetes", fixtures().join("diabetes.model.json"), "0", "0:0.5"),
        ("credit", credit_model.to_path_buf(), "0", "(0.5:1"),
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    let mut ran = true;
    for (data, model, row, target) in &cases {
        let a = format!("{data}-a");
        let b = format!("{data}-b");
        ran &= explain_once(tmp, &a, data, model, row, target);
        ran &= explain_once(tmp, &b, data, model, row, target);
        let Ok(entries) = fs::read_dir(tmp.join(&a)) else {
            ran = false;
            continue;
        };
        let mut names: Vec<String> = entries.filter_map(|e| e.ok()?.file_name().into_string().ok()).collect();
        names.sort();
        for n in names {
            compared += 1;
            if fs::read(tmp.join(&a).join(&n)).ok() != fs::read(tmp.join(&b).join(&n)).ok() {
                differing.push(format!("{data}/{n}"));
            }
        }
    }
    r.line(
        ran && compared >= 16 && differing.is_empty(),
        "determinism across processes",
        format!("{compared} files compared, differing: {differing:?}"),
    );
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let (_, credit_model) = credit(tmp.path());
    let mut r = Report { failed: 0 };

    oracle_equivalence(&mut r);
    hypervolume_checks(&mut r);
    worked_example(&mut r);
    let (instances, elapsed) = ranking_runs(&credit_model);
    method_ranking(&mut r, &instances, elapsed);
    ice_initialization(&mut r, &credit_model);
    conditional_mutator(&mut r, &instances, &credit_model);
    constraint_invariants(&mut r, &instances, &credit_model);
    determinism(&mut r, tmp.path(), &credit_model);

    if r.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", r.failed);
        ExitCode::FAILURE
    }
}
