//! Batch prediction over arbitrary models, plus the ICE curves and
//! response surfaces computed on top of it.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ModelError, Result};
use crate::feature::{DataPoint, FeatureKind, FeatureSchema, ObservedDataset, Value};

/// A deterministic batch predictor. Classifiers return the probability of
/// one user-selected class.
pub trait PredictionModel: Send + Sync {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, ModelError>;

    fn predict(&self, x: &DataPoint) -> Result<f64, ModelError> {
        let out = self.predict_batch(std::slice::from_ref(x))?;
        Ok(out[0])
    }
}

impl<M: PredictionModel + ?Sized> PredictionModel for Box<M> {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, ModelError> {
        (**self).predict_batch(batch)
    }
}

impl<M: PredictionModel + ?Sized> PredictionModel for std::sync::Arc<M> {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, ModelError> {
        (**self).predict_batch(batch)
    }
}

/// Constant predictor, mostly useful in tests.
#[derive(Clone, Copy, Debug)]
pub struct ConstantModel(pub f64);

impl PredictionModel for ConstantModel {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, ModelError> {
        Ok(vec![self.0; batch.len()])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Logistic,
}

/// One column of the linear model's design: a numeric feature's raw value,
/// or the indicator of one level of a categorical feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedTerm {
    pub feature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    feature: usize,
    level: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    intercept: f64,
    coefficients: Vec<f64>,
    terms: Vec<Term>,
    link: Link,
}

impl LinearModel {
    pub fn new(
        schema: &FeatureSchema,
        link: Link,
        intercept: f64,
        coefficients: Vec<f64>,
        encoding: &[EncodedTerm],
    ) -> Result<Self, ModelError> {
        if coefficients.len() != encoding.len() {
            return Err(ModelError::Definition(format!(
                "{} coefficients for {} encoded columns",
                coefficients.len(),
                encoding.len()
            )));
        }
        let terms = encoding
            .iter()
            .map(|t| {
                let j = schema.index_of(&t.feature).ok_or_else(|| {
                    ModelError::Definition(format!("unknown feature `{}`", t.feature))
                })?;
                let f = schema.feature(j);
                let level = match (&t.level, f.kind().is_numeric()) {
                    (None, true) => None,
                    (Some(l), false) => Some(f.level_index(l).ok_or_else(|| {
                        ModelError::Definition(format!("unknown level `{l}` of `{}`", t.feature))
                    })?),
                    (None, false) => {
                        return Err(ModelError::Definition(format!(
                            "categorical feature `{}` needs a level",
                            t.feature
                        )))
                    }
                    (Some(_), true) => {
                        return Err(ModelError::Definition(format!(
                            "numeric feature `{}` cannot take a level",
                            t.feature
                        )))
                    }
                };
                Ok(Term { feature: j, level })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(LinearModel {
            intercept,
            coefficients,
            terms,
            link,
        })
    }

    /// Model over numeric features only, one coefficient per feature.
    pub fn numeric(
        schema: &FeatureSchema,
        link: Link,
        intercept: f64,
        coefficients: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let encoding: Vec<EncodedTerm> = schema
            .names()
            .map(|n| EncodedTerm {
                feature: n.to_string(),
                level: None,
            })
            .collect();
        Self::new(schema, link, intercept, coefficients, &encoding)
    }

    pub fn linear_predictor(&self, x: &DataPoint) -> f64 {
        self.terms
            .iter()
            .zip(&self.coefficients)
            .fold(self.intercept, |acc, (t, &c)| {
                let v = match (x.get(t.feature), t.level) {
                    (Value::Num(v), None) => v,
                    (Value::Level(l), Some(want)) => f64::from(u8::from(l == want)),
                    _ => 0.0,
                };
                acc + c * v
            })
    }

    pub fn predict_one(&self, x: &DataPoint) -> f64 {
        let eta = self.linear_predictor(x);
        match self.link {
            Link::Identity => eta,
            Link::Logistic => 1.0 / (1.0 + (-eta).exp()),
        }
    }
}

impl PredictionModel for LinearModel {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, ModelError> {
        Ok(batch.iter().map(|x| self.predict_one(x)).collect())
    }
}

/// A model living in another process. Each batch is written as headerless
/// CSV to the child's stdin; the child answers with one prediction per line.
#[derive(Debug)]
pub struct ExternalModel {
    command: PathBuf,
    args: Vec<String>,
    workdir: Option<PathBuf>,
    schema: FeatureSchema,
    lock: Mutex<()>,
}

impl ExternalModel {
    pub fn new(command: impl Into<PathBuf>, args: Vec<String>, schema: FeatureSchema) -> Self {
        ExternalModel {
            command: command.into(),
            args,
            workdir: None,
            schema,
            lock: Mutex::new(()),
        }
    }

    /// Runs the child in `dir`.
    pub fn in_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.workdir = Some(dir.into());
        self
    }

    /// Sends a one-point batch and checks that exactly one finite
    /// prediction comes back.
    pub fn probe(&self, x: &DataPoint) -> Result<f64, ModelError> {
        self.predict(x)
    }

    fn encode(&self, batch: &[DataPoint]) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for x in batch {
            // writing to a Vec cannot fail
            w.write_record(self.schema.format_record(x))
                .expect("in-memory csv write");
        }
        w.into_inner().expect("in-memory csv flush")
    }
}

impl PredictionModel for ExternalModel {
    fn predict_batch(&self, batch: &[DataPoint]) -> Result<Vec<f64>, ModelError> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let input = self.encode(batch);
        let command = self.command.display().to_string();
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut cmd = Command::new(&self.command);
        cmd.args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        let mut child = cmd.spawn().map_err(|source| ModelError::Spawn {
            command: command.clone(),
            source,
        })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            // a child that exits early closes the pipe; its exit status reports that
            let _ = stdin.write_all(&input);
        });
        let output = child.wait_with_output().map_err(|source| ModelError::Spawn {
            command: command.clone(),
            source,
        })?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(ModelError::ExitStatus {
                command,
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        let text = String::from_utf8_lossy(&output.stdout);
        let preds = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let v: f64 = l.trim().parse().map_err(|_| ModelError::MalformedOutput {
                    line: i + 1,
                    text: l.to_string(),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(ModelError::NonFinite(v))
                }
            })
            .collect::<Result<Vec<f64>, ModelError>>()?;
        if preds.len() != batch.len() {
            return Err(ModelError::CountMismatch {
                expected: batch.len(),
                got: preds.len(),
            });
        }
        Ok(preds)
    }
}

/// Model file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelSpec {
    Linear {
        link: Link,
        intercept: f64,
        coefficients: Vec<f64>,
        encoding: Vec<EncodedTerm>,
    },
    External {
        command: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

impl ModelSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| ModelError::Definition(format!("{}: {e}", path.display())).into())
    }

    /// Instantiates the model. External commands containing a path
    /// separator and the child's working directory are resolved against
    /// `base_dir` (normally the directory of the model file).
    pub fn build(
        &self,
        schema: &FeatureSchema,
        base_dir: Option<&Path>,
    ) -> Result<Box<dyn PredictionModel>, ModelError> {
        match self {
            ModelSpec::Linear {
                link,
                intercept,
                coefficients,
                encoding,
            } => Ok(Box::new(LinearModel::new(
                schema,
                *link,
                *intercept,
                coefficients.clone(),
                encoding,
            )?)),
            ModelSpec::External { command, args } => {
                let mut program = PathBuf::from(command);
                if let Some(dir) = base_dir {
                    if program.is_relative() && program.components().count() > 1 {
                        program = dir.join(program);
                    }
                }
                let mut m = ExternalModel::new(program, args.clone(), schema.clone());
                if let Some(dir) = base_dir {
                    m = m.in_dir(dir);
                }
                Ok(Box::new(m))
            }
        }
    }
}

/// Loads a model file and instantiates it relative to the file's directory.
pub fn load_model(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
) -> Result<Box<dyn PredictionModel>> {
    let path = path.as_ref();
    let spec = ModelSpec::from_json_file(path)?;
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    Ok(spec.build(schema, dir)?)
}

/// Population (divide-by-n) standard deviation.
pub fn population_sd(values: &[f64]) -> f64 {
    // exact zero for flat curves, which the mean would not guarantee
    if values.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Grid of values for one feature: equidistant over its observed range for
/// numeric features (rounded for integers), all levels otherwise.
pub fn feature_grid(observed: &ObservedDataset, j: usize, size: usize) -> Vec<Value> {
    let f = observed.schema().feature(j);
    match observed.derived_ranges()[j] {
        Some((lo, hi)) => {
            let step = if size > 1 {
                (hi - lo) / (size - 1) as f64
            } else {
                0.0
            };
            (0..size)
                .map(|i| {
                    let v = if i + 1 == size { hi } else { lo + step * i as f64 };
                    if f.kind() == FeatureKind::Integer {
                        Value::Num(v.round())
                    } else {
                        Value::Num(v)
                    }
                })
                .collect()
        }
        None => (0..f.levels().len() as u32).map(Value::Level).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IceCurve {
    pub feature: usize,
    #[serde(skip)]
    pub grid: Vec<Value>,
    pub predictions: Vec<f64>,
    pub sigma: f64,
}

pub const DEFAULT_ICE_GRID: usize = 10;

/// Predictions for `x_star` as feature `j` sweeps its grid, all other
/// features held at `x_star`.
pub fn ice_curve(
    model: &dyn PredictionModel,
    x_star: &DataPoint,
    observed: &ObservedDataset,
    j: usize,
    grid_size: usize,
) -> Result<IceCurve> {
    if grid_size < 2 {
        return Err(Error::ConfigInvalid("ICE grid needs at least 2 points".into()));
    }
    let grid = feature_grid(observed, j, grid_size);
    let batch: Vec<DataPoint> = grid
        .iter()
        .map(|&v| {
            let mut x = x_star.clone();
            x.set(j, v);
            x
        })
        .collect();
    let predictions = model.predict_batch(&batch)?;
    let sigma = population_sd(&predictions);
    Ok(IceCurve {
        feature: j,
        grid,
        predictions,
        sigma,
    })
}

/// ICE standard deviations of every feature, in one model call.
pub fn ice_sigmas(
    model: &dyn PredictionModel,
    x_star: &DataPoint,
    observed: &ObservedDataset,
    grid_size: usize,
) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::ConfigInvalid("ICE grid needs at least 2 points".into()));
    }
    let p = observed.schema().p();
    let grids: Vec<Vec<Value>> = (0..p).map(|j| feature_grid(observed, j, grid_size)).collect();
    let batch: Vec<DataPoint> = grids
        .iter()
        .enumerate()
        .flat_map(|(j, g)| {
            g.iter().map(move |&v| {
                let mut x = x_star.clone();
                x.set(j, v);
                x
            })
        })
        .collect();
    let preds = model.predict_batch(&batch)?;
    let mut offset = 0;
    Ok(grids
        .iter()
        .map(|g| {
            let s = population_sd(&preds[offset..offset + g.len()]);
            offset += g.len();
            s
        })
        .collect())
}

/// Two-feature ICE surface through `x_star`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub feature_a: String,
    pub feature_b: String,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// `predictions[i][k]` is the prediction at `(a_values[i], b_values[k])`.
    pub predictions: Vec<Vec<f64>>,
}

pub fn response_surface_grid(
    model: &dyn PredictionModel,
    x_star: &DataPoint,
    observed: &ObservedDataset,
    a: usize,
    b: usize,
    resolution: usize,
) -> Result<SurfaceGrid> {
    let schema = observed.schema();
    if a == b {
        return Err(Error::ConfigInvalid("surface features must differ".into()));
    }
    if resolution < 2 {
        return Err(Error::ConfigInvalid("surface resolution must be at least 2".into()));
    }
    for j in [a, b] {
        if j >= schema.p() {
            return Err(Error::ConfigInvalid(format!("feature index {j} out of range")));
        }
        if !schema.feature(j).kind().is_numeric() {
            return Err(Error::ConfigInvalid(format!(
                "surface feature `{}` is not numerical",
                schema.feature(j).name()
            )));
        }
    }
    let nums = |g: Vec<Value>| g.into_iter().filter_map(Value::as_num).collect::<Vec<_>>();
    let a_values = nums(feature_grid(observed, a, resolution));
    let b_values = nums(feature_grid(observed, b, resolution));
    let mut batch = Vec::with_capacity(resolution * resolution);
    for &va in &a_values {
        for &vb in &b_values {
            let mut x = x_star.clone();
            x.set(a, Value::Num(va));
            x.set(b, Value::Num(vb));
            batch.push(x);
        }
    }
    let preds = model.predict_batch(&batch)?;
    let predictions = preds.chunks(b_values.len()).map(<[f64]>::to_vec).collect();
    Ok(SurfaceGrid {
        feature_a: schema.feature(a).name().to_string(),
        feature_b: schema.feature(b).name().to_string(),
        a_values,
        b_values,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::FeatureDescriptor;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDescriptor::numerical("a", 0.0, 10.0).unwrap(),
            FeatureDescriptor::numerical("b", 0.0, 100.0).unwrap(),
            FeatureDescriptor::categorical("c", ["x", "y", "z"]).unwrap(),
        ])
        .unwrap()
    }

    fn observed() -> ObservedDataset {
        let rows = (0..=10)
            .map(|i| {
                DataPoint::new(vec![
                    Value::Num(i as f64),
                    Value::Num((i * 10) as f64),
                    Value::Level((i % 3) as u32),
                ])
            })
            .collect();
        ObservedDataset::new(schema(), rows).unwrap()
    }

    fn x_star() -> DataPoint {
        DataPoint::new(vec![Value::Num(5.0), Value::Num(50.0), Value::Level(1)])
    }

    fn terms(names: &[(&str, Option<&str>)]) -> Vec<EncodedTerm> {
        names
            .iter()
            .map(|(f, l)| EncodedTerm {
                feature: f.to_string(),
                level: l.map(str::to_string),
            })
            .collect()
    }

    #[test]
    fn zero_logistic_model_predicts_half() {
        let m = LinearModel::new(
            &schema(),
            Link::Logistic,
            0.0,
            vec![0.0, 0.0, 0.0],
            &terms(&[("a", None), ("b", None), ("c", Some("y"))]),
        )
        .unwrap();
        let preds = m.predict_batch(&[x_star(), x_star()]).unwrap();
        assert_eq!(preds, vec![0.5, 0.5]);
    }

    #[test]
    fn identity_intercept_only_predicts_intercept() {
        let m = LinearModel::numeric(
            &FeatureSchema::new(vec![FeatureDescriptor::numerical("a", 0.0, 1.0).unwrap()])
                .unwrap(),
            Link::Identity,
            1.0,
            vec![0.0],
        )
        .unwrap();
        let x = DataPoint::new(vec![Value::Num(0.3)]);
        assert_eq!(m.predict_batch(&[x.clone(), x]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn one_hot_terms_hit_only_their_level() {
        let m = LinearModel::new(
            &schema(),
            Link::Identity,
            0.0,
            vec![2.0, -3.0],
            &terms(&[("c", Some("y")), ("c", Some("z"))]),
        )
        .unwrap();
        let mut x = x_star();
        assert_eq!(m.predict_one(&x), 2.0);
        x.set(2, Value::Level(2));
        assert_eq!(m.predict_one(&x), -3.0);
        x.set(2, Value::Level(0));
        assert_eq!(m.predict_one(&x), 0.0);
    }

    #[test]
    fn linear_definition_errors() {
        let s = schema();
        assert!(LinearModel::new(&s, Link::Identity, 0.0, vec![1.0], &[]).is_err());
        assert!(LinearModel::new(&s, Link::Identity, 0.0, vec![1.0], &terms(&[("q", None)])).is_err());
        assert!(LinearModel::new(&s, Link::Identity, 0.0, vec![1.0], &terms(&[("c", None)])).is_err());
        assert!(
            LinearModel::new(&s, Link::Identity, 0.0, vec![1.0], &terms(&[("a", Some("x"))]))
                .is_err()
        );
    }

    #[test]
    fn model_spec_parses_both_kinds() {
        let lin = r#"{"type":"linear","link":"logistic","intercept":0.5,
            "coefficients":[1.0],"encoding":[{"feature":"a"}]}"#;
        let spec: ModelSpec = serde_json::from_str(lin).unwrap();
        let m = spec.build(&schema(), None).unwrap();
        let p = m.predict(&x_star()).unwrap();
        assert!((p - 1.0 / (1.0 + (-5.5f64).exp())).abs() < 1e-15);
        let ext = r#"{"type":"external","command":"awk","args":["{print 1}"]}"#;
        let spec: ModelSpec = serde_json::from_str(ext).unwrap();
        assert!(matches!(spec, ModelSpec::External { .. }));
    }

    #[test]
    fn ice_of_constant_model_is_flat() {
        let c = ice_curve(&ConstantModel(0.3), &x_star(), &observed(), 0, 10).unwrap();
        assert_eq!(c.grid.len(), 10);
        assert_eq!(c.sigma, 0.0);
    }

    #[test]
    fn ice_of_linear_feature_scales_grid_sd() {
        let coef = -0.7;
        let m = LinearModel::new(
            &schema(),
            Link::Identity,
            0.2,
            vec![coef],
            &terms(&[("a", None)]),
        )
        .unwrap();
        let c = ice_curve(&m, &x_star(), &observed(), 0, 10).unwrap();
        let grid: Vec<f64> = c.grid.iter().filter_map(|v| v.as_num()).collect();
        assert_eq!(grid.first(), Some(&0.0));
        assert_eq!(grid.last(), Some(&10.0));
        for (g, p) in grid.iter().zip(&c.predictions) {
            assert!((p - (0.2 + coef * g)).abs() < 1e-12);
        }
        let sd_grid = population_sd(&grid);
        assert!((c.sigma - coef.abs() * sd_grid).abs() < 1e-12);
        // closed form for 10 equidistant points over [0, 10]: step * sqrt((n^2-1)/12)
        let step = 10.0 / 9.0;
        assert!((sd_grid - step * (99.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ice_sigma_ignores_evaluation_order() {
        let m = LinearModel::new(
            &schema(),
            Link::Logistic,
            0.0,
            vec![0.3, 0.02],
            &terms(&[("a", None), ("b", None)]),
        )
        .unwrap();
        let c = ice_curve(&m, &x_star(), &observed(), 0, 10).unwrap();
        let mut rev = c.predictions.clone();
        rev.reverse();
        assert!((population_sd(&rev) - c.sigma).abs() < 1e-15);
        let all = ice_sigmas(&m, &x_star(), &observed(), 10).unwrap();
        assert_eq!(all[0], c.sigma);
        assert_eq!(all[2], 0.0);
    }

    #[test]
    fn ice_categorical_grid_is_all_levels() {
        let c = ice_curve(&ConstantModel(0.1), &x_star(), &observed(), 2, 10).unwrap();
        assert_eq!(c.grid, vec![Value::Level(0), Value::Level(1), Value::Level(2)]);
        assert!(ice_curve(&ConstantModel(0.1), &x_star(), &observed(), 2, 1).is_err());
    }

    #[test]
    fn surface_of_constant_model_is_flat() {
        let s = response_surface_grid(&ConstantModel(0.4), &x_star(), &observed(), 0, 1, 5).unwrap();
        assert_eq!(s.predictions.len(), 5);
        assert!(s.predictions.iter().flatten().all(|&v| v == 0.4));
    }

    #[test]
    fn surface_through_x_star_matches_prediction() {
        let m = LinearModel::new(
            &schema(),
            Link::Logistic,
            -1.0,
            vec![0.3, 0.01],
            &terms(&[("a", None), ("b", None)]),
        )
        .unwrap();
        // resolution 11 puts a = 5 and b = 50 on the grid
        let s = response_surface_grid(&m, &x_star(), &observed(), 0, 1, 11).unwrap();
        assert_eq!(s.a_values[5], 5.0);
        assert_eq!(s.b_values[5], 50.0);
        assert_eq!(s.predictions[5][5], m.predict_one(&x_star()));
    }

    #[test]
    fn additive_surface_rows_differ_by_constants() {
        let m = LinearModel::new(
            &schema(),
            Link::Identity,
            0.0,
            vec![0.3, -0.02],
            &terms(&[("a", None), ("b", None)]),
        )
        .unwrap();
        let s = response_surface_grid(&m, &x_star(), &observed(), 0, 1, 7).unwrap();
        for i in 1..s.predictions.len() {
            let d0 = s.predictions[i][0] - s.predictions[0][0];
            for k in 0..s.b_values.len() {
                assert!((s.predictions[i][k] - s.predictions[0][k] - d0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn surface_rejects_bad_requests() {
        let (m, x, o) = (ConstantModel(0.0), x_star(), observed());
        assert!(response_surface_grid(&m, &x, &o, 0, 0, 5).is_err());
        assert!(response_surface_grid(&m, &x, &o, 0, 1, 1).is_err());
        assert!(response_surface_grid(&m, &x, &o, 0, 2, 5).is_err());
    }

    #[test]
    fn external_model_round_trips_through_a_process() {
        // prints the first column plus one for each row
        let m = ExternalModel::new(
            "awk",
            vec!["-F,".into(), "{print $1 + 1}".into()],
            schema(),
        );
        let mut x2 = x_star();
        x2.set(0, Value::Num(2.5));
        let preds = m.predict_batch(&[x_star(), x2]).unwrap();
        assert_eq!(preds, vec![6.0, 3.5]);
        assert_eq!(m.probe(&x_star()).unwrap(), 6.0);
        assert!(m.predict_batch(&[]).unwrap().is_empty());
    }

    #[test]
    fn external_model_failures() {
        let s = schema();
        let missing = ExternalModel::new("/nonexistent/predictor", vec![], s.clone());
        assert!(matches!(missing.predict(&x_star()), Err(ModelError::Spawn { .. })));
        let failing = ExternalModel::new("sh", vec!["-c".into(), "cat >/dev/null; exit 3".into()], s.clone());
        assert!(matches!(failing.predict(&x_star()), Err(ModelError::ExitStatus { .. })));
        let garbage = ExternalModel::new("sh", vec!["-c".into(), "cat >/dev/null; echo nope".into()], s.clone());
        assert!(matches!(garbage.predict(&x_star()), Err(ModelError::MalformedOutput { .. })));
        let short = ExternalModel::new("sh", vec!["-c".into(), "cat >/dev/null; echo 0.5".into()], s);
        assert!(matches!(
            short.predict_batch(&[x_star(), x_star()]),
            Err(ModelError::CountMismatch { expected: 2, got: 1 })
        ));
    }
}
