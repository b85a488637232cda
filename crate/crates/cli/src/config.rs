//! Run configuration: a flat `key = value` text format with dotted keys.
//! Every key can also be given on the command line as `--<key> <value>`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use firealarm_core::classifiers::{
    AdaBoostConfig, CartConfig, FeatureSubsample, GbtConfig, KnnConfig, LinearSvmConfig, LogisticConfig,
    NaiveBayesConfig, RandomForestConfig,
};
use firealarm_core::dataset::{ColumnSchema, FeatureColumn, NormalizationMethod};
use firealarm_core::density::{EnsembleConfig, RegionWeights};
use firealarm_core::resampling::{SmoteConfig, TargetCount};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "FIREALARM_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Lr,
    Dt,
    Rf,
    Nb,
    Knn,
    Svm,
    Gbt,
    AdaBoost,
    Ensemble,
}

impl ModelKind {
    /// Comparison-table order, ensemble last.
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Lr,
        ModelKind::Dt,
        ModelKind::Rf,
        ModelKind::Nb,
        ModelKind::Knn,
        ModelKind::Svm,
        ModelKind::Gbt,
        ModelKind::AdaBoost,
        ModelKind::Ensemble,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Nb => "nb",
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
            ModelKind::Gbt => "gbt",
            ModelKind::AdaBoost => "adaboost",
            ModelKind::Ensemble => "ensemble",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Lr => "Logistic Regression",
            ModelKind::Dt => "Decision Tree",
            ModelKind::Rf => "Random Forest",
            ModelKind::Nb => "Naive Bayes",
            ModelKind::Knn => "K-Nearest Neighbour",
            ModelKind::Svm => "Support Vector Machine",
            ModelKind::Gbt => "Gradient Boosted Trees",
            ModelKind::AdaBoost => "Adaptive Boosting",
            ModelKind::Ensemble => "Weighted Ensemble",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let k = s.trim().to_ascii_lowercase();
        let alias = match k.as_str() {
            "xgboost" => "gbt",
            "adab" => "adaboost",
            "weighted" | "weighted_ensemble" => "ensemble",
            other => other,
        };
        ModelKind::ALL
            .into_iter()
            .find(|m| m.key() == alias)
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitOn {
    Full,
    Train,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Txt,
}

impl OutputFormat {
    fn key(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Txt => "txt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_path: Option<PathBuf>,
    pub data_synthetic: bool,
    pub data_n_per_class: usize,
    pub data_separation: f64,
    pub data_seed: u64,
    pub schema_target: String,
    pub schema_features: Vec<String>,
    pub features_drop: Vec<String>,
    pub normalize_method: NormalizationMethod,
    pub normalize_fit_on: FitOn,
    pub smote_enabled: bool,
    pub smote_k: usize,
    pub smote_before_split: bool,
    pub smote_seed: u64,
    pub split_fraction: f64,
    pub split_seed: u64,
    pub split_stratified: bool,
    pub models: Vec<ModelKind>,
    pub lr: LogisticConfig,
    pub nb: NaiveBayesConfig,
    pub knn: KnnConfig,
    pub dt: CartConfig,
    pub rf: RandomForestConfig,
    pub adaboost: AdaBoostConfig,
    pub gbt: GbtConfig,
    pub svm: LinearSvmConfig,
    pub density_k: usize,
    pub density_alpha_high: f64,
    pub density_alpha_low: f64,
    pub output_dir: PathBuf,
    pub output_formats: Vec<OutputFormat>,
    pub output_per_row: bool,
    pub output_save_model: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let weights = RegionWeights::default();
        RunConfig {
            data_path: None,
            data_synthetic: false,
            data_n_per_class: 2000,
            data_separation: 3.0,
            data_seed: 42,
            schema_target: firealarm_core::dataset::FIRE_ALARM.to_string(),
            schema_features: ColumnSchema::smoke_detection().feature_names().map(String::from).collect(),
            features_drop: Vec::new(),
            normalize_method: NormalizationMethod::MinMax,
            normalize_fit_on: FitOn::Full,
            smote_enabled: true,
            smote_k: 5,
            smote_before_split: true,
            smote_seed: 42,
            split_fraction: 0.2,
            split_seed: 42,
            split_stratified: false,
            models: ModelKind::ALL.to_vec(),
            lr: LogisticConfig::default(),
            nb: NaiveBayesConfig::default(),
            knn: KnnConfig::default(),
            dt: CartConfig::default(),
            rf: RandomForestConfig::default(),
            adaboost: AdaBoostConfig::default(),
            gbt: GbtConfig::default(),
            svm: LinearSvmConfig::default(),
            density_k: 10,
            density_alpha_high: weights.alpha_high,
            density_alpha_low: weights.alpha_low,
            output_dir: PathBuf::from("out"),
            output_formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Txt],
            output_per_row: true,
            output_save_model: false,
        }
    }
}

/// Every accepted key, in the order `to_text` emits them.
pub const KEYS: &[&str] = &[
    "data.path",
    "data.synthetic",
    "data.n_per_class",
    "data.separation",
    "data.seed",
    "schema.target",
    "schema.features",
    "features.drop",
    "normalize.method",
    "normalize.fit_on",
    "smote.enabled",
    "smote.k",
    "smote.before_split",
    "smote.seed",
    "split.fraction",
    "split.seed",
    "split.stratified",
    "models",
    "lr.learning_rate",
    "lr.epochs",
    "lr.l2",
    "nb.variance_smoothing",
    "knn.k",
    "dt.max_depth",
    "dt.min_samples_split",
    "rf.n_trees",
    "rf.max_depth",
    "rf.feature_subsample",
    "rf.seed",
    "adaboost.n_rounds",
    "gbt.n_rounds",
    "gbt.max_depth",
    "gbt.learning_rate",
    "gbt.l2",
    "gbt.min_split_gain",
    "svm.epochs",
    "svm.regularization",
    "svm.seed",
    "density.k",
    "density.alpha_high",
    "density.alpha_low",
    "output.dir",
    "output.formats",
    "output.per_row",
    "output.save_model",
];

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::config(format!("`{key} = {value}`: {why}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, "cannot parse value"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn at_least(key: &str, value: &str, min: usize) -> Result<usize, CliError> {
    let v: usize = parse(key, value)?;
    if v < min {
        return Err(bad(key, value, &format!("must be at least {min}")));
    }
    Ok(v)
}

fn positive(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = parse(key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad(key, value, "must be a positive number"));
    }
    Ok(v)
}

fn non_negative(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = parse(key, value)?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(bad(key, value, "must be a non-negative number"));
    }
    Ok(v)
}

fn unit(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = parse(key, value)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(bad(key, value, "must lie in [0, 1]"));
    }
    Ok(v)
}

fn depth(key: &str, value: &str) -> Result<Option<usize>, CliError> {
    if value == "none" {
        return Ok(None);
    }
    at_least(key, value, 1).map(Some)
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn fmt_depth(d: Option<usize>) -> String {
    d.map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl RunConfig {
    /// Sets one key from its text value, range-checking it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "data.path" => self.data_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "data.synthetic" => self.data_synthetic = parse_bool(key, value)?,
            "data.n_per_class" => self.data_n_per_class = at_least(key, value, 1)?,
            "data.separation" => self.data_separation = non_negative(key, value)?,
            "data.seed" => self.data_seed = parse(key, value)?,
            "schema.target" => {
                if value.is_empty() {
                    return Err(bad(key, value, "must not be empty"));
                }
                self.schema_target = value.to_string();
            }
            "schema.features" => {
                let names = list(value);
                if names.is_empty() {
                    return Err(bad(key, value, "needs at least one feature"));
                }
                self.schema_features = names;
            }
            "features.drop" => self.features_drop = list(value),
            "normalize.method" => {
                self.normalize_method = value.parse().map_err(|_| bad(key, value, "expected min_max or z_score"))?
            }
            "normalize.fit_on" => {
                self.normalize_fit_on = match value {
                    "full" => FitOn::Full,
                    "train" => FitOn::Train,
                    _ => return Err(bad(key, value, "expected full or train")),
                }
            }
            "smote.enabled" => self.smote_enabled = parse_bool(key, value)?,
            "smote.k" => self.smote_k = at_least(key, value, 1)?,
            "smote.before_split" => self.smote_before_split = parse_bool(key, value)?,
            "smote.seed" => self.smote_seed = parse(key, value)?,
            "split.fraction" => {
                let f: f64 = parse(key, value)?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(bad(key, value, "must lie strictly between 0 and 1"));
                }
                self.split_fraction = f;
            }
            "split.seed" => self.split_seed = parse(key, value)?,
            "split.stratified" => self.split_stratified = parse_bool(key, value)?,
            "models" => {
                let mut models = Vec::new();
                for name in list(value) {
                    let m: ModelKind = name.parse().map_err(|e: String| bad(key, value, &e))?;
                    if !models.contains(&m) {
                        models.push(m);
                    }
                }
                if models.is_empty() {
                    return Err(bad(key, value, "needs at least one model"));
                }
                self.models = models;
            }
            "lr.learning_rate" => self.lr.learning_rate = positive(key, value)?,
            "lr.epochs" => self.lr.epochs = parse(key, value)?,
            "lr.l2" => self.lr.l2 = non_negative(key, value)?,
            "nb.variance_smoothing" => self.nb.variance_smoothing = positive(key, value)?,
            "knn.k" => self.knn.k = at_least(key, value, 1)?,
            "dt.max_depth" => self.dt.max_depth = depth(key, value)?,
            "dt.min_samples_split" => self.dt.min_samples_split = at_least(key, value, 2)?,
            "rf.n_trees" => self.rf.n_trees = at_least(key, value, 1)?,
            "rf.max_depth" => self.rf.max_depth = depth(key, value)?,
            "rf.feature_subsample" => {
                self.rf.feature_subsample = match value {
                    "sqrt" => FeatureSubsample::Sqrt,
                    "all" => FeatureSubsample::All,
                    n => FeatureSubsample::Count(at_least(key, n, 1)?),
                }
            }
            "rf.seed" => self.rf.seed = parse(key, value)?,
            "adaboost.n_rounds" => self.adaboost.n_rounds = at_least(key, value, 1)?,
            "gbt.n_rounds" => self.gbt.n_rounds = at_least(key, value, 1)?,
            "gbt.max_depth" => self.gbt.max_depth = at_least(key, value, 1)?,
            "gbt.learning_rate" => self.gbt.learning_rate = positive(key, value)?,
            "gbt.l2" => self.gbt.l2 = non_negative(key, value)?,
            "gbt.min_split_gain" => self.gbt.min_split_gain = non_negative(key, value)?,
            "svm.epochs" => self.svm.epochs = at_least(key, value, 1)?,
            "svm.regularization" => self.svm.regularization = positive(key, value)?,
            "svm.seed" => self.svm.seed = parse(key, value)?,
            "density.k" => self.density_k = at_least(key, value, 1)?,
            "density.alpha_high" => self.density_alpha_high = unit(key, value)?,
            "density.alpha_low" => self.density_alpha_low = unit(key, value)?,
            "output.dir" => {
                if value.is_empty() {
                    return Err(bad(key, value, "must not be empty"));
                }
                self.output_dir = PathBuf::from(value);
            }
            "output.formats" => {
                let mut formats = Vec::new();
                for f in list(value) {
                    let fmt = match f.as_str() {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        "txt" => OutputFormat::Txt,
                        _ => return Err(bad(key, value, "formats are csv, json, txt")),
                    };
                    if !formats.contains(&fmt) {
                        formats.push(fmt);
                    }
                }
                self.output_formats = formats;
            }
            "output.per_row" => self.output_per_row = parse_bool(key, value)?,
            "output.save_model" => self.output_save_model = parse_bool(key, value)?,
            _ => return Err(CliError::config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::config(format!("line {}: {}", n + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_text(&text)
    }

    /// Cross-key checks.
    pub fn validate(&self) -> Result<(), CliError> {
        self.region_weights()?;
        self.schema()?;
        if self.smote_enabled && self.smote_before_split && self.normalize_fit_on == FitOn::Train {
            return Err(CliError::config(
                "normalize.fit_on = train needs smote.before_split = false (SMOTE runs on normalized features)",
            ));
        }
        Ok(())
    }

    pub fn region_weights(&self) -> Result<RegionWeights, CliError> {
        RegionWeights::new(self.density_alpha_high, self.density_alpha_low)
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn schema(&self) -> Result<ColumnSchema, CliError> {
        let defaults = ColumnSchema::smoke_detection();
        let cols = self
            .schema_features
            .iter()
            .map(|name| {
                let unit = defaults
                    .position(name)
                    .map(|p| defaults.feature_columns[p].unit.clone())
                    .unwrap_or_default();
                FeatureColumn::new(name.clone(), unit)
            })
            .collect();
        ColumnSchema::new(cols, self.schema_target.clone()).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn smote(&self) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.smote_k,
            target_count: TargetCount::MatchMajority,
            seed: self.smote_seed,
        }
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig, CliError> {
        Ok(EnsembleConfig {
            knn: self.knn.clone(),
            gbt: self.gbt.clone(),
            k_density: self.density_k,
            weights: self.region_weights()?,
        })
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.output_formats.contains(&f)
    }

    fn value_of(&self, key: &str) -> String {
        let join = |v: &[String]| v.join(",");
        match key {
            "data.path" => self.data_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "data.synthetic" => self.data_synthetic.to_string(),
            "data.n_per_class" => self.data_n_per_class.to_string(),
            "data.separation" => self.data_separation.to_string(),
            "data.seed" => self.data_seed.to_string(),
            "schema.target" => self.schema_target.clone(),
            "schema.features" => join(&self.schema_features),
            "features.drop" => join(&self.features_drop),
            "normalize.method" => self.normalize_method.to_string(),
            "normalize.fit_on" => match self.normalize_fit_on {
                FitOn::Full => "full".into(),
                FitOn::Train => "train".into(),
            },
            "smote.enabled" => self.smote_enabled.to_string(),
            "smote.k" => self.smote_k.to_string(),
            "smote.before_split" => self.smote_before_split.to_string(),
            "smote.seed" => self.smote_seed.to_string(),
            "split.fraction" => self.split_fraction.to_string(),
            "split.seed" => self.split_seed.to_string(),
            "split.stratified" => self.split_stratified.to_string(),
            "models" => self.models.iter().map(|m| m.key()).collect::<Vec<_>>().join(","),
            "lr.learning_rate" => self.lr.learning_rate.to_string(),
            "lr.epochs" => self.lr.epochs.to_string(),
            "lr.l2" => self.lr.l2.to_string(),
            "nb.variance_smoothing" => self.nb.variance_smoothing.to_string(),
            "knn.k" => self.knn.k.to_string(),
            "dt.max_depth" => fmt_depth(self.dt.max_depth),
            "dt.min_samples_split" => self.dt.min_samples_split.to_string(),
            "rf.n_trees" => self.rf.n_trees.to_string(),
            "rf.max_depth" => fmt_depth(self.rf.max_depth),
            "rf.feature_subsample" => match self.rf.feature_subsample {
                FeatureSubsample::Sqrt => "sqrt".into(),
                FeatureSubsample::All => "all".into(),
                FeatureSubsample::Count(n) => n.to_string(),
            },
            "rf.seed" => self.rf.seed.to_string(),
            "adaboost.n_rounds" => self.adaboost.n_rounds.to_string(),
            "gbt.n_rounds" => self.gbt.n_rounds.to_string(),
            "gbt.max_depth" => self.gbt.max_depth.to_string(),
            "gbt.learning_rate" => self.gbt.learning_rate.to_string(),
            "gbt.l2" => self.gbt.l2.to_string(),
            "gbt.min_split_gain" => self.gbt.min_split_gain.to_string(),
            "svm.epochs" => self.svm.epochs.to_string(),
            "svm.regularization" => self.svm.regularization.to_string(),
            "svm.seed" => self.svm.seed.to_string(),
            "density.k" => self.density_k.to_string(),
            "density.alpha_high" => self.density_alpha_high.to_string(),
            "density.alpha_low" => self.density_alpha_low.to_string(),
            "output.dir" => self.output_dir.display().to_string(),
            "output.formats" => self.output_formats.iter().map(|f| f.key()).collect::<Vec<_>>().join(","),
            "output.per_row" => self.output_per_row.to_string(),
            "output.save_model" => self.output_save_model.to_string(),
            other => unreachable!("unregistered key {other}"),
        }
    }

    /// The effective configuration with every key spelled out.
    pub fn to_text(&self) -> String {
        self.render(&[])
    }

    /// Same as `to_text` minus `output.dir`, which never affects results.
    /// Hashed into run metadata so reruns elsewhere stay byte-identical.
    pub fn experiment_text(&self) -> String {
        self.render(&["output.dir"])
    }

    fn render(&self, skip: &[&str]) -> String {
        let mut s = String::from("# firealarm run configuration\n");
        let mut section = "";
        for key in KEYS.iter().filter(|k| !skip.contains(k)) {
            let head = key.split('.').next().unwrap_or(key);
            if head != section {
                let _ = writeln!(s, "\n# {head}");
                section = head;
            }
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }
}
