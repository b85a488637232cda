//! Baseline binary classifiers behind a common probabilistic contract.

mod adaboost;
mod gbt;
mod knn;
mod logistic;
mod naive_bayes;
mod forest;
mod svm;
mod tree;

pub use adaboost::{adaboost_alpha, fit_adaboost, AdaBoost, AdaBoostConfig};
pub use forest::{fit_random_forest, FeatureSubsample, RandomForest, RandomForestConfig};
pub use gbt::{fit_gbt, fit_gbt_traced, leaf_weight, log_loss_from_scores, split_gain, GbtConfig, GradientBoostedTrees};
pub use knn::{fit_knn, KnnConfig, KnnModel};
pub use logistic::{fit_logistic, logistic_loss_grad, LogisticConfig, LogisticRegression};
pub use naive_bayes::{fit_gaussian_nb, GaussianNb, NaiveBayesConfig};
pub use svm::{fit_linear_svm, LinearSvm, LinearSvmConfig};
pub use tree::{fit_cart, CartConfig, DecisionTree, Node, Tree};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DECISION_THRESHOLD: f64 = 0.5;

/// A fitted binary classifier that scores inputs with the probability of
/// label 1.
pub trait ProbabilisticClassifier: Send + Sync {
    fn n_features(&self) -> usize;

    /// Probability of label 1 for an input already known to have
    /// `n_features()` values.
    fn proba(&self, x: &[f64]) -> f64;

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_features(), x.len())?;
        Ok(self.proba(x))
    }

    fn predict_label(&self, x: &[f64]) -> Result<u8> {
        self.predict_label_at(x, DECISION_THRESHOLD)
    }

    fn predict_label_at(&self, x: &[f64], threshold: f64) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= threshold))
    }

    fn predict_proba_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_dim(self.n_features(), rows.n_cols())?;
        Ok((0..rows.n_rows()).into_par_iter().map(|i| self.proba(rows.row(i))).collect())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn require_non_empty(n: usize, context: &'static str) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDataset(context));
    }
    Ok(())
}

/// Any fitted baseline model; the serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Logistic(LogisticRegression),
    NaiveBayes(GaussianNb),
    Knn(KnnModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    AdaBoost(AdaBoost),
    Gbt(GradientBoostedTrees),
    LinearSvm(LinearSvm),
}

impl Model {
    fn inner(&self) -> &dyn ProbabilisticClassifier {
        match self {
            Model::Logistic(m) => m,
            Model::NaiveBayes(m) => m,
            Model::Knn(m) => m,
            Model::DecisionTree(m) => m,
            Model::RandomForest(m) => m,
            Model::AdaBoost(m) => m,
            Model::Gbt(m) => m,
            Model::LinearSvm(m) => m,
        }
    }
}

impl ProbabilisticClassifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.inner().proba(x)
    }

    fn predict_proba_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        self.inner().predict_proba_batch(rows)
    }
}

macro_rules! impl_from_model {
    ($($variant:ident($ty:ty)),*) => {
        $(impl From<$ty> for Model {
            fn from(m: $ty) -> Self {
                Model::$variant(m)
            }
        })*
    };
}

impl_from_model!(
    Logistic(LogisticRegression),
    NaiveBayes(GaussianNb),
    Knn(KnnModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    AdaBoost(AdaBoost),
    Gbt(GradientBoostedTrees),
    LinearSvm(LinearSvm)
);
