//! Mixed feature spaces: schemas, data points, observed datasets and the
//! Gower dissimilarity used by every distance-based objective.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numerical,
    Integer,
    Categorical,
    Binary,
}

impl FeatureKind {
    /// Numerical and integer features are measured on a real line.
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Numerical | FeatureKind::Integer)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureKind::Numerical => "numerical",
            FeatureKind::Integer => "integer",
            FeatureKind::Categorical => "categorical",
            FeatureKind::Binary => "binary",
        };
        f.write_str(s)
    }
}

/// One feature value. Categorical and binary values are stored as the index
/// of their level in the descriptor's level list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Level(u32),
}

impl Value {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Level(_) => None,
        }
    }

    pub fn as_level(self) -> Option<u32> {
        match self {
            Value::Level(l) => Some(l),
            Value::Num(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub struct FeatureDescriptor {
    name: String,
    kind: FeatureKind,
    range: Option<(f64, f64)>,
    levels: Vec<String>,
    actionable: bool,
    user_bounds: Option<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawDescriptor {
    name: String,
    kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
    #[serde(default = "default_true")]
    actionable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    user_bounds: Option<[f64; 2]>,
}

fn default_true() -> bool {
    true
}

impl TryFrom<RawDescriptor> for FeatureDescriptor {
    type Error = Error;

    fn try_from(raw: RawDescriptor) -> Result<Self> {
        let d = FeatureDescriptor {
            name: raw.name,
            kind: raw.kind,
            range: raw.range.map(|[lo, hi]| (lo, hi)),
            levels: raw.levels.unwrap_or_default(),
            actionable: raw.actionable,
            user_bounds: raw.user_bounds.map(|[lo, hi]| (lo, hi)),
        };
        d.check()?;
        Ok(d)
    }
}

impl From<FeatureDescriptor> for RawDescriptor {
    fn from(d: FeatureDescriptor) -> Self {
        RawDescriptor {
            name: d.name,
            kind: d.kind,
            range: d.range.map(|(lo, hi)| [lo, hi]),
            levels: if d.levels.is_empty() {
                None
            } else {
                Some(d.levels)
            },
            actionable: d.actionable,
            user_bounds: d.user_bounds.map(|(lo, hi)| [lo, hi]),
        }
    }
}

impl FeatureDescriptor {
    pub fn numerical(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        Self::numeric_kind(name, FeatureKind::Numerical, lower, upper)
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        Self::numeric_kind(name, FeatureKind::Integer, lower, upper)
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        Self::level_kind(name, FeatureKind::Categorical, levels)
    }

    pub fn binary<S: Into<String>>(name: impl Into<String>, levels: [S; 2]) -> Result<Self> {
        Self::level_kind(name, FeatureKind::Binary, levels)
    }

    fn numeric_kind(
        name: impl Into<String>,
        kind: FeatureKind,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let d = FeatureDescriptor {
            name: name.into(),
            kind,
            range: Some((lower, upper)),
            levels: Vec::new(),
            actionable: true,
            user_bounds: None,
        };
        d.check()?;
        Ok(d)
    }

    fn level_kind<S: Into<String>>(
        name: impl Into<String>,
        kind: FeatureKind,
        levels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let d = FeatureDescriptor {
            name: name.into(),
            kind,
            range: None,
            levels: levels.into_iter().map(Into::into).collect(),
            actionable: true,
            user_bounds: None,
        };
        d.check()?;
        Ok(d)
    }

    /// Marks the feature as non-actionable.
    pub fn frozen(mut self) -> Self {
        self.actionable = false;
        self
    }

    pub fn with_user_bounds(mut self, lower: f64, upper: f64) -> Result<Self> {
        self.user_bounds = Some((lower, upper));
        self.check()?;
        Ok(self)
    }

    pub(crate) fn set_actionable(&mut self, actionable: bool) {
        self.actionable = actionable;
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchema(format!("feature `{}`: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(Error::InvalidSchema("empty feature name".into()));
        }
        if self.kind.is_numeric() {
            let Some((lo, hi)) = self.range else {
                return bad("numeric features need a range".into());
            };
            if !self.levels.is_empty() {
                return bad("numeric features cannot declare levels".into());
            }
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return bad(format!("invalid range [{lo}, {hi}]"));
            }
            if let Some((ulo, uhi)) = self.user_bounds {
                if !(ulo.is_finite() && uhi.is_finite()) || ulo > uhi || ulo < lo || uhi > hi {
                    return bad(format!("user bounds [{ulo}, {uhi}] must lie within [{lo}, {hi}]"));
                }
            }
        } else {
            if self.range.is_some() || self.user_bounds.is_some() {
                return bad("level features cannot declare a range".into());
            }
            let n = self.levels.len();
            if self.kind == FeatureKind::Binary && n != 2 {
                return bad(format!("binary features need exactly 2 levels, got {n}"));
            }
            if n < 2 {
                return bad(format!("categorical features need at least 2 levels, got {n}"));
            }
            let unique: HashSet<&str> = self.levels.iter().map(String::as_str).collect();
            if unique.len() != n {
                return bad("duplicate levels".into());
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        self.range
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn actionable(&self) -> bool {
        self.actionable
    }

    pub fn user_bounds(&self) -> Option<(f64, f64)> {
        self.user_bounds
    }

    /// Interval that changed values are capped to.
    pub fn capping_bounds(&self) -> Option<(f64, f64)> {
        self.user_bounds.or(self.range)
    }

    pub fn level_index(&self, label: &str) -> Option<u32> {
        self.levels.iter().position(|l| l == label).map(|i| i as u32)
    }

    pub fn parse(&self, text: &str) -> Result<Value> {
        let text = text.trim();
        if self.kind.is_numeric() {
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Parse(format!("`{text}` is not a number for `{}`", self.name)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("non-finite value for `{}`", self.name)));
            }
            if self.kind == FeatureKind::Integer && v.fract() != 0.0 {
                return Err(Error::SchemaMismatch(format!(
                    "`{text}` is not an integer for `{}`",
                    self.name
                )));
            }
            Ok(Value::Num(v))
        } else {
            self.level_index(text).map(Value::Level).ok_or_else(|| {
                Error::SchemaMismatch(format!(
                    "`{text}` is not a level of `{}` ({})",
                    self.name,
                    self.levels.join(", ")
                ))
            })
        }
    }

    pub fn format(&self, value: Value) -> String {
        match value {
            Value::Num(v) => format!("{v}"),
            Value::Level(l) => self.levels[l as usize].clone(),
        }
    }

    pub fn to_json(&self, value: Value) -> serde_json::Value {
        match value {
            Value::Num(v) => serde_json::json!(v),
            Value::Level(l) => serde_json::Value::String(self.levels[l as usize].clone()),
        }
    }

    pub fn from_json(&self, value: &serde_json::Value) -> Result<Value> {
        match value {
            serde_json::Value::String(s) => self.parse(s),
            serde_json::Value::Number(n) if self.kind.is_numeric() => {
                self.parse(&n.to_string())
            }
            other => Err(Error::Parse(format!(
                "unexpected value {other} for `{}`",
                self.name
            ))),
        }
    }

    pub fn is_valid(&self, value: Value) -> bool {
        match (self.kind.is_numeric(), value) {
            (true, Value::Num(v)) => {
                v.is_finite() && (self.kind != FeatureKind::Integer || v.fract() == 0.0)
            }
            (false, Value::Level(l)) => (l as usize) < self.levels.len(),
            _ => false,
        }
    }

    /// Caps a numeric value into the capping bounds and rounds integers.
    pub fn clamp(&self, value: Value) -> Value {
        let Value::Num(v) = value else {
            return value;
        };
        let Some((lo, hi)) = self.capping_bounds() else {
            return value;
        };
        let mut v = v.clamp(lo, hi);
        if self.kind == FeatureKind::Integer {
            v = v.round();
            if v > hi {
                v = hi.floor();
            }
            if v < lo {
                v = lo.ceil();
            }
        }
        Value::Num(v)
    }
}

/// Ordered collection of feature descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDescriptor>", into = "Vec<FeatureDescriptor>")]
pub struct FeatureSchema {
    features: Vec<FeatureDescriptor>,
}

impl TryFrom<Vec<FeatureDescriptor>> for FeatureSchema {
    type Error = Error;

    fn try_from(features: Vec<FeatureDescriptor>) -> Result<Self> {
        FeatureSchema::new(features)
    }
}

impl From<FeatureSchema> for Vec<FeatureDescriptor> {
    fn from(s: FeatureSchema) -> Self {
        s.features
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDescriptor>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSchema("schema has no features".into()));
        }
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{}`", f.name)));
            }
        }
        Ok(FeatureSchema { features })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSchema(e.to_string()))
    }

    pub fn p(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &FeatureDescriptor {
        &self.features[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Marks the named features as non-actionable.
    pub fn freeze<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        for name in names {
            let name = name.as_ref();
            let j = self
                .index_of(name)
                .ok_or_else(|| Error::ConfigInvalid(format!("unknown feature `{name}`")))?;
            self.features[j].set_actionable(false);
        }
        Ok(())
    }

    pub fn set_user_bounds(&mut self, name: &str, lower: f64, upper: f64) -> Result<()> {
        let j = self
            .index_of(name)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown feature `{name}`")))?;
        let updated = self.features[j].clone().with_user_bounds(lower, upper)?;
        self.features[j] = updated;
        Ok(())
    }

    pub fn validate(&self, x: &DataPoint) -> Result<()> {
        if x.len() != self.p() {
            return Err(Error::SchemaMismatch(format!(
                "point has {} values, schema has {} features",
                x.len(),
                self.p()
            )));
        }
        for (f, &v) in self.features.iter().zip(x.values()) {
            if !f.is_valid(v) {
                return Err(Error::SchemaMismatch(format!(
                    "value {v:?} is not valid for {} feature `{}`",
                    f.kind, f.name
                )));
            }
        }
        Ok(())
    }

    pub fn parse_record<S: AsRef<str>>(&self, cells: &[S]) -> Result<DataPoint> {
        if cells.len() != self.p() {
            return Err(Error::SchemaMismatch(format!(
                "record has {} cells, schema has {} features",
                cells.len(),
                self.p()
            )));
        }
        self.features
            .iter()
            .zip(cells)
            .map(|(f, c)| f.parse(c.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(DataPoint::new)
    }

    pub fn format_record(&self, x: &DataPoint) -> Vec<String> {
        self.features
            .iter()
            .zip(x.values())
            .map(|(f, &v)| f.format(v))
            .collect()
    }

    /// JSON object keyed by feature name.
    pub fn point_to_json(&self, x: &DataPoint) -> serde_json::Value {
        let map = self
            .features
            .iter()
            .zip(x.values())
            .map(|(f, &v)| (f.name.clone(), f.to_json(v)))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }

    pub fn point_from_json(&self, value: &serde_json::Value) -> Result<DataPoint> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("point must be a JSON object".into()))?;
        self.features
            .iter()
            .map(|f| {
                let v = obj.get(&f.name).ok_or_else(|| Error::MissingValue {
                    row: 0,
                    column: f.name.clone(),
                })?;
                f.from_json(v)
            })
            .collect::<Result<Vec<_>>>()
            .map(DataPoint::new)
    }
}

/// One mixed-type feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPoint(Vec<Value>);

impl DataPoint {
    pub fn new(values: Vec<Value>) -> Self {
        DataPoint(values)
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [Value] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> Value {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, v: Value) {
        self.0[j] = v;
    }
}

impl From<Vec<Value>> for DataPoint {
    fn from(v: Vec<Value>) -> Self {
        DataPoint(v)
    }
}

/// Per-feature dissimilarity in `[0, 1]`.
///
/// A zero range (constant feature in the observed data) degrades to an
/// inequality indicator.
pub fn gower_delta(a: Value, b: Value, range: f64) -> f64 {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => {
            if range > 0.0 && range.is_finite() {
                ((x - y).abs() / range).min(1.0)
            } else if x == y {
                0.0
            } else {
                1.0
            }
        }
        (Value::Level(x), Value::Level(y)) => f64::from(u8::from(x != y)),
        _ => 1.0,
    }
}

/// Mean of per-feature Gower deltas. `ranges` holds the observed range
/// width per feature (ignored for level features).
pub fn gower_distance(x: &DataPoint, y: &DataPoint, ranges: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    debug_assert_eq!(x.len(), ranges.len());
    let sum: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .zip(ranges)
        .map(|((&a, &b), &r)| gower_delta(a, b, r))
        .sum();
    sum / x.len() as f64
}

/// Caps every numeric value into its capping bounds; integers are rounded
/// half away from zero afterwards. Level values pass through.
pub fn clamp_to_ranges(x: &DataPoint, schema: &FeatureSchema) -> DataPoint {
    DataPoint(
        schema
            .features()
            .iter()
            .zip(x.values())
            .map(|(f, &v)| f.clamp(v))
            .collect(),
    )
}

/// A schema together with the rows observed for it.
#[derive(Clone, Debug)]
pub struct ObservedDataset {
    schema: FeatureSchema,
    rows: Vec<DataPoint>,
    derived_ranges: Vec<Option<(f64, f64)>>,
    widths: Vec<f64>,
}

impl ObservedDataset {
    pub fn new(schema: FeatureSchema, rows: Vec<DataPoint>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for x in &rows {
            schema.validate(x)?;
        }
        let derived_ranges: Vec<Option<(f64, f64)>> = (0..schema.p())
            .map(|j| {
                if !schema.feature(j).kind().is_numeric() {
                    return None;
                }
                let (lo, hi) = rows
                    .iter()
                    .filter_map(|x| x.get(j).as_num())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                Some((lo, hi))
            })
            .collect();
        let widths = derived_ranges
            .iter()
            .map(|r| r.map_or(0.0, |(lo, hi)| hi - lo))
            .collect();
        Ok(ObservedDataset {
            schema,
            rows,
            derived_ranges,
            widths,
        })
    }

    /// Reads a headed CSV file whose columns follow the schema in order.
    pub fn load(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Self> {
        let schema = FeatureSchema::from_json_file(schema_path)?;
        Self::load_with_schema(csv_path, schema)
    }

    pub fn load_with_schema(csv_path: impl AsRef<Path>, schema: FeatureSchema) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
        Self::from_csv_reader(file, schema)
    }

    pub fn from_csv_reader(reader: impl std::io::Read, schema: FeatureSchema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        let expected: Vec<&str> = schema.names().collect();
        if names != expected {
            return Err(Error::SchemaMismatch(format!(
                "header [{}] does not match schema [{}]",
                names.join(", "),
                expected.join(", ")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if let Some(j) = rec.iter().position(|c| c.trim().is_empty()) {
                return Err(Error::MissingValue {
                    row: i,
                    column: expected[j].to_string(),
                });
            }
            let cells: Vec<&str> = rec.iter().collect();
            rows.push(schema.parse_record(&cells)?);
        }
        Self::new(schema, rows)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[DataPoint] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Observed `[min, max]` per numeric feature, `None` for level features.
    pub fn derived_ranges(&self) -> &[Option<(f64, f64)>] {
        &self.derived_ranges
    }

    /// Observed range widths used as Gower normalizers.
    pub fn gower_ranges(&self) -> &[f64] {
        &self.widths
    }

    /// Replaces the schema, e.g. after freezing features or narrowing
    /// bounds. The new schema must describe the same feature space.
    pub fn with_schema(mut self, schema: FeatureSchema) -> Result<Self> {
        let same_shape = schema.p() == self.schema.p()
            && schema
                .features()
                .iter()
                .zip(self.schema.features())
                .all(|(a, b)| a.name() == b.name() && a.kind() == b.kind() && a.levels() == b.levels());
        if !same_shape {
            return Err(Error::SchemaMismatch("replacement schema has a different shape".into()));
        }
        self.schema = schema;
        Ok(self)
    }

    /// Removes row `i` and returns it with the remaining dataset, whose
    /// ranges are re-derived without the row.
    pub fn split_off_row(&self, i: usize) -> Result<(DataPoint, ObservedDataset)> {
        if i >= self.rows.len() {
            return Err(Error::ConfigInvalid(format!(
                "row {i} out of range (dataset has {} rows)",
                self.rows.len()
            )));
        }
        let x = self.rows[i].clone();
        let rest = self
            .rows
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, r)| r.clone())
            .collect();
        Ok((x, ObservedDataset::new(self.schema.clone(), rest)?))
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        write_points_csv(&self.schema, &self.rows, writer)
    }
}

pub(crate) fn write_points_csv(
    schema: &FeatureSchema,
    rows: &[DataPoint],
    writer: impl std::io::Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(schema.names()).map_err(to_err)?;
    for x in rows {
        w.write_record(schema.format_record(x)).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn housing() -> FeatureDescriptor {
        FeatureDescriptor::categorical("housing", ["own", "rent", "free"]).unwrap()
    }

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDescriptor::integer("age", 18.0, 100.0)
                .unwrap()
                .with_user_bounds(18.0, 90.0)
                .unwrap(),
            housing(),
            FeatureDescriptor::numerical("amount", 0.0, 20000.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn delta_numerical_is_range_normalized() {
        assert_eq!(gower_delta(Value::Num(5.0), Value::Num(10.0), 10.0), 0.5);
    }

    #[test]
    fn delta_categorical_is_indicator() {
        let h = housing();
        let own = h.parse("own").unwrap();
        let rent = h.parse("rent").unwrap();
        assert_eq!(gower_delta(own, own, 0.0), 0.0);
        assert_eq!(gower_delta(own, rent, 0.0), 1.0);
    }

    #[test]
    fn delta_zero_range_degrades_to_indicator() {
        assert_eq!(gower_delta(Value::Num(3.0), Value::Num(3.0), 0.0), 0.0);
        assert_eq!(gower_delta(Value::Num(3.0), Value::Num(4.0), 0.0), 1.0);
    }

    #[test]
    fn delta_is_clipped_to_one() {
        assert_eq!(gower_delta(Value::Num(0.0), Value::Num(30.0), 10.0), 1.0);
    }

    #[test]
    fn distance_is_mean_of_deltas() {
        let x = DataPoint::new(vec![Value::Num(5.0), Value::Level(0)]);
        let y = DataPoint::new(vec![Value::Num(10.0), Value::Level(1)]);
        assert_eq!(gower_distance(&x, &y, &[10.0, 0.0]), 0.75);
        assert_eq!(gower_distance(&x, &x, &[10.0, 0.0]), 0.0);
    }

    #[test]
    fn clamp_caps_to_user_bounds() {
        let s = schema();
        let x = DataPoint::new(vec![Value::Num(120.0), Value::Level(1), Value::Num(500.0)]);
        let c = clamp_to_ranges(&x, &s);
        assert_eq!(c.get(0), Value::Num(90.0));
        assert_eq!(c.get(1), Value::Level(1));
        assert_eq!(c.get(2), Value::Num(500.0));
    }

    #[test]
    fn clamp_in_bounds_is_identity() {
        let s = schema();
        let x = DataPoint::new(vec![Value::Num(40.0), Value::Level(2), Value::Num(1.5)]);
        assert_eq!(clamp_to_ranges(&x, &s), x);
    }

    #[test]
    fn clamp_rounds_integers_half_away_from_zero() {
        let s = schema();
        for (input, want) in [(36.6, 37.0), (36.5, 37.0), (36.4, 36.0)] {
            let x = DataPoint::new(vec![Value::Num(input), Value::Level(0), Value::Num(1.0)]);
            // oracle: floor(v + 0.5) for positive v
            assert_eq!(want, (input + 0.5_f64).floor());
            assert_eq!(clamp_to_ranges(&x, &s).get(0), Value::Num(want));
        }
        let d = FeatureDescriptor::integer("n", 0.0, 10.0).unwrap();
        assert_eq!(d.clamp(Value::Num(3.6)), Value::Num(4.0));
    }

    #[test]
    fn clamp_keeps_rounded_integer_inside_fractional_bounds() {
        let d = FeatureDescriptor::integer("n", 0.0, 10.0)
            .unwrap()
            .with_user_bounds(1.5, 3.5)
            .unwrap();
        assert_eq!(d.clamp(Value::Num(3.5)), Value::Num(3.0));
        assert_eq!(d.clamp(Value::Num(1.0)), Value::Num(2.0));
    }

    #[test]
    fn descriptor_invariants() {
        assert!(FeatureDescriptor::numerical("x", 2.0, 1.0).is_err());
        assert!(FeatureDescriptor::categorical("c", ["a"]).is_err());
        assert!(FeatureDescriptor::binary("b", ["a", "a"]).is_err());
        assert!(FeatureDescriptor::numerical("x", 0.0, 1.0)
            .unwrap()
            .with_user_bounds(-1.0, 0.5)
            .is_err());
        let json = r#"{"name":"x","kind":"categorical","levels":["a","b"],"range":[0,1]}"#;
        assert!(serde_json::from_str::<FeatureDescriptor>(json).is_err());
        let json = r#"{"name":"x","kind":"binary","levels":["a","b","c"]}"#;
        assert!(serde_json::from_str::<FeatureDescriptor>(json).is_err());
    }

    #[test]
    fn schema_json_round_trip() {
        let s = schema();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(FeatureSchema::from_json_str(&text).unwrap(), s);
        assert!(FeatureSchema::from_json_str("[]").is_err());
        let dup = r#"[{"name":"a","kind":"numerical","range":[0,1]},{"name":"a","kind":"numerical","range":[0,1]}]"#;
        assert!(FeatureSchema::from_json_str(dup).is_err());
    }

    #[test]
    fn load_rejects_unknown_level() {
        let csv = "age,housing,amount\n22,rentt,5951\n";
        let err = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)), "{err}");
    }

    #[test]
    fn load_rejects_missing_cell_and_bad_header() {
        let csv = "age,housing,amount\n22,,5951\n";
        let err = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap_err();
        assert!(matches!(err, Error::MissingValue { row: 0, .. }), "{err}");
        let csv = "age,amount,housing\n22,5951,own\n";
        let err = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)), "{err}");
        let csv = "age,housing,amount\nold,own,5951\n";
        let err = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)), "{err}");
    }

    #[test]
    fn single_row_dataset_has_degenerate_ranges() {
        let csv = "age,housing,amount\n18,own,20000\n";
        let d = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap();
        assert_eq!(d.derived_ranges()[0], Some((18.0, 18.0)));
        assert_eq!(d.derived_ranges()[1], None);
        assert_eq!(d.derived_ranges()[2], Some((20000.0, 20000.0)));
        assert_eq!(d.gower_ranges(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn csv_round_trip_validates() {
        let csv = "age,housing,amount\n22,own,5951\n45,free,1200.5\n";
        let d = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap();
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), csv);
        let again = ObservedDataset::from_csv_reader(out.as_slice(), schema()).unwrap();
        assert_eq!(again.rows(), d.rows());
        for r in again.rows() {
            again.schema().validate(r).unwrap();
        }
    }

    #[test]
    fn split_off_row_rederives_ranges() {
        let csv = "age,housing,amount\n22,own,5951\n45,free,1200\n30,rent,3000\n";
        let d = ObservedDataset::from_csv_reader(csv.as_bytes(), schema()).unwrap();
        let (x, rest) = d.split_off_row(0).unwrap();
        assert_eq!(x.get(0), Value::Num(22.0));
        assert_eq!(rest.len(), 2);
        assert_eq!(rest.derived_ranges()[0], Some((30.0, 45.0)));
        assert!(d.split_off_row(3).is_err());
    }

    fn numeric_point(n: usize) -> impl Strategy<Value = DataPoint> {
        prop::collection::vec(-50.0..50.0f64, n)
            .prop_map(|v| DataPoint::new(v.into_iter().map(Value::Num).collect()))
    }

    proptest! {
        #[test]
        fn gower_is_a_bounded_symmetric_metric(
            x in numeric_point(4), y in numeric_point(4), z in numeric_point(4),
            ranges in prop::collection::vec(1.0..200.0f64, 4),
        ) {
            let dxy = gower_distance(&x, &y, &ranges);
            let dyx = gower_distance(&y, &x, &ranges);
            let dxz = gower_distance(&x, &z, &ranges);
            let dzy = gower_distance(&z, &y, &ranges);
            prop_assert!((0.0..=1.0).contains(&dxy));
            prop_assert_eq!(dxy, dyx);
            prop_assert_eq!(gower_distance(&x, &x, &ranges), 0.0);
            prop_assert_eq!(dxy == 0.0, x == y);
            prop_assert!(dxy <= dxz + dzy + 1e-12);
        }

        #[test]
        fn clamp_is_idempotent(age in -10.0..200.0f64, amount in -1e5..1e5f64, h in 0u32..3) {
            let s = schema();
            let x = DataPoint::new(vec![Value::Num(age), Value::Level(h), Value::Num(amount)]);
            let once = clamp_to_ranges(&x, &s);
            prop_assert_eq!(clamp_to_ranges(&once, &s), once.clone());
            s.validate(&once).unwrap();
        }
    }
}
