//! Data preparation and model fitting shared by the subcommands.

use sha2::{Digest, Sha256};

use firealarm_core::classifiers::{
    fit_adaboost, fit_cart, fit_gaussian_nb, fit_gbt, fit_knn, fit_linear_svm, fit_logistic, fit_random_forest,
};
use firealarm_core::dataset::{
    apply_normalizer, clean, fit_normalizer, generate_synthetic, load_dataset, train_test_split,
};
use firealarm_core::resampling::smote_oversample;
use firealarm_core::{ensemble_fit, Dataset, Model, ProbabilisticClassifier, WeightedEnsembleModel};

use crate::config::{FitOn, ModelKind, RunConfig};
use crate::error::CliError;

/// Loaded data after feature dropping, before cleaning.
pub struct Loaded {
    pub data: Dataset,
    pub fingerprint: String,
}

pub struct Prepared {
    pub fingerprint: String,
    pub loaded_rows: usize,
    pub dropped_rows: usize,
    pub n_features: usize,
    /// Class counts after cleaning, `[no_alarm, alarm]`.
    pub counts_before: [usize; 2],
    /// Counts of whichever set SMOTE resampled; `None` when disabled.
    pub counts_after: Option<[usize; 2]>,
    pub train: Dataset,
    pub test: Dataset,
}

/// SHA-256 over shape, feature names, feature bits and labels.
pub fn fingerprint(d: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((d.n_rows() as u64).to_le_bytes());
    h.update((d.n_features() as u64).to_le_bytes());
    for name in d.schema().feature_names() {
        h.update(name.as_bytes());
        h.update([0u8]);
    }
    for v in d.features().as_slice() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(d.labels());
    hex::encode(h.finalize())
}

pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let data = if cfg.data_synthetic {
        generate_synthetic(cfg.data_n_per_class, cfg.data_separation, cfg.data_seed)
            .map_err(|e| CliError::from_core("synthetic data generation", e))?
    } else {
        let path = cfg
            .data_path
            .as_ref()
            .ok_or_else(|| CliError::config("no input: set data.path or pass --synthetic"))?;
        let schema = cfg.schema()?;
        load_dataset(path, &schema).map_err(|e| CliError::data(format!("loading {}", path.display()), e))?
    };
    let fingerprint = fingerprint(&data);
    let data = if cfg.features_drop.is_empty() {
        data
    } else {
        data.drop_features(&cfg.features_drop)
            .map_err(|e| CliError::from_core("dropping features", e))?
    };
    Ok(Loaded { data, fingerprint })
}

/// Cleaned data only; used by commands that do not train.
pub fn load_clean(cfg: &RunConfig) -> Result<(Loaded, usize), CliError> {
    let mut loaded = load(cfg)?;
    let (data, dropped) = clean(&loaded.data).map_err(|e| CliError::data("cleaning", e))?;
    loaded.data = data;
    Ok((loaded, dropped))
}

/// load, clean, normalize, SMOTE and split, in the order the config asks for.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    cfg.validate()?;
    let raw = load(cfg)?;
    let loaded_rows = raw.data.n_rows();
    let (data, dropped_rows) = clean(&raw.data).map_err(|e| CliError::data("cleaning", e))?;
    let counts_before = data.class_counts();
    let normalize = |fit_set: &Dataset, target: &Dataset| -> Result<Dataset, CliError> {
        let params = fit_normalizer(fit_set, cfg.normalize_method).map_err(|e| CliError::data("normalization", e))?;
        apply_normalizer(target, &params).map_err(|e| CliError::data("normalization", e))
    };
    let smote = |d: &Dataset| smote_oversample(d, &cfg.smote()).map_err(|e| CliError::from_core("SMOTE", e));
    let split = |d: &Dataset| {
        train_test_split(d, cfg.split_fraction, cfg.split_seed, cfg.split_stratified)
            .map_err(|e| CliError::data("train/test split", e))
    };

    let (train, test, counts_after) = if cfg.smote_enabled && cfg.smote_before_split {
        let normalized = normalize(&data, &data)?;
        let resampled = smote(&normalized)?;
        let idx = split(&resampled)?;
        let counts = resampled.class_counts();
        (resampled.subset(&idx.train), resampled.subset(&idx.test), Some(counts))
    } else {
        let idx = split(&data)?;
        let normalized = match cfg.normalize_fit_on {
            FitOn::Full => normalize(&data, &data)?,
            FitOn::Train => normalize(&data.subset(&idx.train), &data)?,
        };
        let mut train = normalized.subset(&idx.train);
        let test = normalized.subset(&idx.test);
        let mut counts_after = None;
        if cfg.smote_enabled {
            train = smote(&train)?;
            counts_after = Some(train.class_counts());
        }
        (train, test, counts_after)
    };
    if train.is_empty() || test.is_empty() {
        return Err(CliError::data("train/test split", "a partition is empty"));
    }
    log::info!(
        "prepared {} train / {} test rows with {} features",
        train.n_rows(),
        test.n_rows(),
        train.n_features()
    );
    Ok(Prepared {
        fingerprint: raw.fingerprint,
        loaded_rows,
        dropped_rows,
        n_features: train.n_features(),
        counts_before,
        counts_after,
        train,
        test,
    })
}

pub enum Fitted {
    Baseline(Model),
    Ensemble(WeightedEnsembleModel),
}

impl Fitted {
    pub fn classifier(&self) -> &dyn ProbabilisticClassifier {
        match self {
            Fitted::Baseline(m) => m,
            Fitted::Ensemble(m) => m,
        }
    }
}

pub fn fit(kind: ModelKind, cfg: &RunConfig, train: &Dataset) -> Result<Fitted, CliError> {
    let stage = format!("training {}", kind.display_name());
    let fail = |e| CliError::training(stage.clone(), e);
    let model: Model = match kind {
        ModelKind::Lr => fit_logistic(train, &cfg.lr).map_err(fail)?.into(),
        ModelKind::Dt => fit_cart(train, &cfg.dt).map_err(fail)?.into(),
        ModelKind::Rf => fit_random_forest(train, &cfg.rf).map_err(fail)?.into(),
        ModelKind::Nb => fit_gaussian_nb(train, &cfg.nb).map_err(fail)?.into(),
        ModelKind::Knn => fit_knn(train, &cfg.knn).map_err(fail)?.into(),
        ModelKind::Svm => fit_linear_svm(train, &cfg.svm).map_err(fail)?.into(),
        ModelKind::Gbt => fit_gbt(train, &cfg.gbt).map_err(fail)?.into(),
        ModelKind::AdaBoost => fit_adaboost(train, &cfg.adaboost).map_err(fail)?.into(),
        ModelKind::Ensemble => {
            let ens = ensemble_fit(train, &cfg.ensemble()?).map_err(fail)?;
            return Ok(Fitted::Ensemble(ens));
        }
    };
    Ok(Fitted::Baseline(model))
}
