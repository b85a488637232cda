//! Loading, cleaning, normalization, splitting and synthesis of datasets that
//! follow the smoke-detection sensor schema.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub unit: String,
}

impl FeatureColumn {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        FeatureColumn {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

/// Ordered feature columns plus the binary target column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub feature_columns: Vec<FeatureColumn>,
    pub target_column: String,
    /// An unnamed leading index column may be present in files.
    pub optional_index_column: bool,
}

pub const FIRE_ALARM: &str = "Fire Alarm";

impl ColumnSchema {
    pub fn new(feature_columns: Vec<FeatureColumn>, target_column: impl Into<String>) -> Result<Self> {
        let schema = ColumnSchema {
            feature_columns,
            target_column: target_column.into(),
            optional_index_column: true,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// The 14 sensor features of the public smoke-detection dataset.
    pub fn smoke_detection() -> Self {
        let cols = [
            ("Humidity", "%"),
            ("Pressure", "hPa"),
            ("Temperature", "C"),
            ("CNT", "count"),
            ("eCO2", "ppm"),
            ("NC 0.5", "#/cm3"),
            ("NC 1.0", "#/cm3"),
            ("NC 2.5", "#/cm3"),
            ("PM 1.0", "ug/m3"),
            ("PM 2.5", "ug/m3"),
            ("Raw Ethanol", "raw"),
            ("Raw H2", "raw"),
            ("TVOC", "ppb"),
            ("UTC", "s"),
        ];
        ColumnSchema {
            feature_columns: cols.iter().map(|(n, u)| FeatureColumn::new(*n, *u)).collect(),
            target_column: FIRE_ALARM.to_string(),
            optional_index_column: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.feature_columns {
            if c.name.trim().is_empty() {
                return Err(Error::Schema("empty feature name".into()));
            }
            if !seen.insert(header_key(&c.name)) {
                return Err(Error::Schema(format!("duplicate feature `{}`", c.name)));
            }
        }
        if self.target_column.trim().is_empty() {
            return Err(Error::Schema("empty target column name".into()));
        }
        if seen.contains(&header_key(&self.target_column)) {
            return Err(Error::Schema(format!(
                "target `{}` is also listed as a feature",
                self.target_column
            )));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.feature_columns.len()
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.feature_columns.iter().map(|c| c.name.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        let key = header_key(name);
        self.feature_columns.iter().position(|c| header_key(&c.name) == key)
    }
}

/// Header matching key: lowercase, trailing `[unit]` removed, whitespace dropped,
/// so `Temperature[C]` matches `Temperature` and `PM1.0` matches `PM 1.0`.
pub fn header_key(name: &str) -> String {
    let trimmed = name.trim();
    let base = match (trimmed.rfind('['), trimmed.ends_with(']')) {
        (Some(open), true) if open > 0 => &trimmed[..open],
        _ => trimmed,
    };
    base.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Feature matrix and binary labels (1 = Fire Alarm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: ColumnSchema,
    features: Matrix,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: ColumnSchema, features: Matrix, labels: Vec<u8>) -> Result<Self> {
        schema.validate()?;
        if features.n_cols() != schema.n_features() {
            return Err(Error::Dimension {
                expected: schema.n_features(),
                got: features.n_cols(),
            });
        }
        if features.n_rows() != labels.len() {
            return Err(Error::Argument(format!(
                "{} feature rows but {} labels",
                features.n_rows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Argument(format!("label {bad} is not 0 or 1")));
        }
        Ok(Dataset {
            schema,
            features,
            labels,
        })
    }

    /// Dataset with generic feature names `x0..x{d-1}` and target `y`.
    pub fn from_parts(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let cols = (0..features.n_cols())
            .map(|j| FeatureColumn::new(format!("x{j}"), ""))
            .collect();
        let schema = ColumnSchema::new(cols, "y")?;
        Dataset::new(schema, features, labels)
    }

    pub fn schema(&self) -> &ColumnSchema {
        &self.schema
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `[count of label 0, count of label 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Removes the named feature columns.
    pub fn drop_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let mut drop = HashSet::new();
        for n in names {
            let pos = self.schema.position(n.as_ref()).ok_or_else(|| Error::MissingColumn {
                column: n.as_ref().to_string(),
            })?;
            drop.insert(pos);
        }
        let keep: Vec<usize> = (0..self.n_features()).filter(|j| !drop.contains(j)).collect();
        let schema = ColumnSchema {
            feature_columns: keep.iter().map(|&j| self.schema.feature_columns[j].clone()).collect(),
            ..self.schema.clone()
        };
        Ok(Dataset {
            schema,
            features: self.features.select_cols(&keep),
            labels: self.labels.clone(),
        })
    }

    /// Appends rows; used by resampling.
    pub(crate) fn extend_rows(&mut self, rows: &Matrix, label: u8) {
        for r in rows.rows() {
            self.features.push_row(r);
            self.labels.push(label);
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_dataset(file, schema)
}

/// Reads a comma-separated file with a header row. Columns are picked by name;
/// extra columns (including an unnamed leading index) are ignored. Empty cells
/// read as NaN so that [`clean`] can drop them.
pub fn read_dataset<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let keys: Vec<String> = headers.iter().map(header_key).collect();
    let find = |name: &str| -> Result<usize> {
        let key = header_key(name);
        keys.iter()
            .position(|k| *k == key)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    let feature_pos = schema
        .feature_columns
        .iter()
        .map(|c| find(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let target_pos = find(&schema.target_column)?;

    let mut features = Matrix::empty(schema.n_features());
    let mut labels = Vec::new();
    let mut row = vec![0.0; schema.n_features()];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        for (j, &p) in feature_pos.iter().enumerate() {
            row[j] = parse_cell(record.get(p), row_no, &schema.feature_columns[j].name)?;
        }
        let raw = parse_cell(record.get(target_pos), row_no, &schema.target_column)?;
        let label = if raw == 0.0 {
            0
        } else if raw == 1.0 {
            1
        } else {
            return Err(Error::Parse {
                row: row_no,
                column: schema.target_column.clone(),
                message: format!("label `{raw}` is not 0 or 1"),
            });
        };
        features.push_row(&row);
        labels.push(label);
    }
    Dataset::new(schema.clone(), features, labels)
}

fn parse_cell(cell: Option<&str>, row: usize, column: &str) -> Result<f64> {
    let cell = cell.ok_or_else(|| Error::Parse {
        row,
        column: column.to_string(),
        message: "missing cell".into(),
    })?;
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(f64::NAN);
    }
    cell.parse::<f64>().map_err(|e| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{cell}`: {e}"),
    })
}

/// Writes the dataset in the same dialect [`read_dataset`] accepts. Values use
/// the shortest representation that parses back to the identical `f64`.
pub fn write_dataset<W: Write>(writer: W, d: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = d.schema.feature_names().collect();
    header.push(&d.schema.target_column);
    w.write_record(&header)?;
    let mut cells = Vec::with_capacity(header.len());
    for (r, &l) in d.features.rows().zip(&d.labels) {
        cells.clear();
        cells.extend(r.iter().map(|v| v.to_string()));
        cells.push(l.to_string());
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, d: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_dataset(std::io::BufWriter::new(file), d)
}

/// Drops rows holding NaN or infinite values. Returns the cleaned dataset and
/// the number of dropped rows. Duplicates are kept.
pub fn clean(d: &Dataset) -> Result<(Dataset, usize)> {
    let keep: Vec<usize> = (0..d.n_rows())
        .filter(|&i| d.features.row(i).iter().all(|v| v.is_finite()))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset(" after cleaning"));
    }
    let dropped = d.n_rows() - keep.len();
    if dropped == 0 {
        return Ok((d.clone(), 0));
    }
    Ok((d.subset(&keep), dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    MinMax,
    ZScore,
}

impl fmt::Display for NormalizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMethod::MinMax => "min_max",
            NormalizationMethod::ZScore => "z_score",
        })
    }
}

impl FromStr for NormalizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_max" => Ok(NormalizationMethod::MinMax),
            "z_score" => Ok(NormalizationMethod::ZScore),
            other => Err(Error::Argument(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Per-feature statistics: `(min, max)` for min-max, `(mean, stddev)` for z-score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub method: NormalizationMethod,
    pub stats: Vec<(f64, f64)>,
}

pub fn fit_normalizer(d: &Dataset, method: NormalizationMethod) -> Result<NormalizationParams> {
    if d.is_empty() {
        return Err(Error::EmptyDataset(": cannot fit normalizer"));
    }
    let n = d.n_rows() as f64;
    let stats = (0..d.n_features())
        .map(|j| {
            let col = d.features.column(j);
            match method {
                NormalizationMethod::MinMax => col
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
                NormalizationMethod::ZScore => {
                    let mean = col.iter().sum::<f64>() / n;
                    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
            }
        })
        .collect();
    Ok(NormalizationParams { method, stats })
}

impl NormalizationParams {
    pub fn n_features(&self) -> usize {
        self.stats.len()
    }

    /// Constant features map to zero.
    pub fn transform_row(&self, row: &mut [f64]) {
        for (v, &(a, b)) in row.iter_mut().zip(&self.stats) {
            *v = match self.method {
                NormalizationMethod::MinMax if b > a => (*v - a) / (b - a),
                NormalizationMethod::ZScore if b > 0.0 => (*v - a) / b,
                _ => 0.0,
            };
        }
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if d.n_features() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: d.n_features(),
            });
        }
        let mut features = d.features.clone();
        for i in 0..features.n_rows() {
            self.transform_row(features.row_mut(i));
        }
        Ok(Dataset {
            schema: d.schema.clone(),
            features,
            labels: d.labels.clone(),
        })
    }
}

pub fn apply_normalizer(d: &Dataset, p: &NormalizationParams) -> Result<Dataset> {
    p.apply(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Seeded shuffle-then-partition. The test part holds `round(fraction * n)`
/// rows; with `stratified` each class contributes proportionally.
pub fn train_test_split(d: &Dataset, test_fraction: f64, seed: u64, stratified: bool) -> Result<SplitIndices> {
    split_indices(d.labels(), test_fraction, seed, stratified)
}

pub fn split_indices(labels: &[u8], test_fraction: f64, seed: u64, stratified: bool) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::Argument(format!("cannot split {n} rows")));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (train, test) = if stratified {
        let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
        let mut neg: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let test_pos = ((test_fraction * pos.len() as f64).round() as usize).min(n_test);
        let test_neg = (n_test - test_pos).min(neg.len());
        let test_pos = n_test - test_neg;
        let mut test: Vec<usize> = pos[..test_pos].iter().chain(&neg[..test_neg]).copied().collect();
        let mut train: Vec<usize> = pos[test_pos..].iter().chain(&neg[test_neg..]).copied().collect();
        test.shuffle(&mut rng);
        train.shuffle(&mut rng);
        (train, test)
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let train = idx.split_off(n_test);
        (train, idx)
    };
    Ok(SplitIndices {
        train,
        test,
        seed,
        test_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    pub r: f64,
}

/// Point-biserial (Pearson) correlation of each feature with the label,
/// sorted by `|r|` descending. Constant feature or label gives `r = 0`.
pub fn feature_target_correlation(d: &Dataset) -> Result<Vec<FeatureCorrelation>> {
    if d.is_empty() {
        return Err(Error::EmptyDataset(": cannot correlate"));
    }
    let y: Vec<f64> = d.labels.iter().map(|&l| f64::from(l)).collect();
    let mut out: Vec<FeatureCorrelation> = d
        .schema
        .feature_columns
        .iter()
        .enumerate()
        .map(|(j, c)| FeatureCorrelation {
            feature: c.name.clone(),
            r: pearson(&d.features.column(j), &y),
        })
        .collect();
    out.sort_by(|a, b| b.r.abs().total_cmp(&a.r.abs()));
    Ok(out)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// (mean, spread, direction of the alarm shift) per synthetic feature, in
/// schema order. CNT and UTC are generated as counters.
const SYNTHETIC_PROFILE: [(f64, f64, f64); 14] = [
    (48.5, 8.8, -1.0),    // Humidity
    (938.6, 1.3, 1.0),    // Pressure
    (15.9, 14.3, -1.0),   // Temperature
    (0.0, 0.0, 0.0),      // CNT
    (670.0, 180.0, -1.0), // eCO2
    (100.0, 40.0, -1.0),  // NC 0.5
    (80.0, 30.0, -1.0),   // NC 1.0
    (20.0, 8.0, -1.0),    // NC 2.5
    (100.0, 45.0, -1.0),  // PM 1.0
    (180.0, 80.0, -1.0),  // PM 2.5
    (19750.0, 600.0, -1.0), // Raw Ethanol
    (12940.0, 270.0, 1.0),  // Raw H2
    (1940.0, 800.0, 1.0),   // TVOC
    (0.0, 0.0, 0.0),      // UTC
];

const SYNTHETIC_UTC_START: f64 = 1_654_712_187.0;

/// Balanced synthetic dataset with the smoke-detection schema.
pub fn generate_synthetic(n_per_class: usize, separation: f64, seed: u64) -> Result<Dataset> {
    generate_synthetic_counts(n_per_class, n_per_class, separation, seed)
}

/// Two Gaussian clusters whose means differ by `separation` spreads along every
/// sensor feature. Rows are in shuffled label order; CNT and UTC increase by
/// one per row (1 Hz sampling), so neither carries label information.
pub fn generate_synthetic_counts(n_no_alarm: usize, n_alarm: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n_no_alarm == 0 || n_alarm == 0 {
        return Err(Error::Argument("each class needs at least one row".into()));
    }
    let schema = ColumnSchema::smoke_detection();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = std::iter::repeat_n(0u8, n_no_alarm)
        .chain(std::iter::repeat_n(1u8, n_alarm))
        .collect();
    labels.shuffle(&mut rng);

    let cnt = schema.position("CNT").expect("CNT in schema");
    let utc = schema.position("UTC").expect("UTC in schema");
    let mut features = Matrix::empty(schema.n_features());
    let mut row = vec![0.0; schema.n_features()];
    for (i, &l) in labels.iter().enumerate() {
        for (j, &(mean, spread, dir)) in SYNTHETIC_PROFILE.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            row[j] = mean + spread * (z + dir * separation * f64::from(l));
        }
        row[cnt] = i as f64;
        row[utc] = SYNTHETIC_UTC_START + i as f64;
        features.push_row(&row);
    }
    Dataset::new(schema, features, labels)
}
