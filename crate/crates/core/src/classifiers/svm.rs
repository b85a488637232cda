use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{require_non_empty, sigmoid, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmConfig {
    /// Passes over the data; each pass makes `n` single-sample steps.
    pub epochs: usize,
    pub regularization: f64,
    pub seed: u64,
}

impl Default for LinearSvmConfig {
    fn default() -> Self {
        LinearSvmConfig {
            epochs: 20,
            regularization: 1e-4,
            seed: 42,
        }
    }
}

/// Linear max-margin classifier. The probability is the logistic of the raw
/// margin, uncalibrated: only its ranking and the 0.5 cut are meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

impl ProbabilisticClassifier for LinearSvm {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

/// Pegasos: stochastic subgradient descent on the regularized hinge loss with
/// step `1 / (lambda t)` and projection onto the ball of radius `1/sqrt(lambda)`.
/// The bias is an extra coordinate with a constant input of 1.
pub fn fit_linear_svm(train: &Dataset, cfg: &LinearSvmConfig) -> Result<LinearSvm> {
    if cfg.epochs == 0 || !(cfg.regularization > 0.0) {
        return Err(Error::Argument("epochs must be >= 1 and regularization positive".into()));
    }
    require_non_empty(train.n_rows(), ": cannot fit linear SVM")?;
    if train.class_counts().contains(&0) {
        return Err(Error::Fit("linear SVM needs both classes in the training set".into()));
    }
    let n = train.n_rows();
    let x = train.features();
    let lambda = cfg.regularization;
    let radius = 1.0 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = vec![0.0; train.n_features()];
    let mut b = 0.0;
    let mut t: u64 = 0;
    for _ in 0..cfg.epochs {
        for _ in 0..n {
            t += 1;
            let i = rng.random_range(0..n);
            let row = x.row(i);
            let y = if train.labels()[i] == 1 { 1.0 } else { -1.0 };
            let eta = 1.0 / (lambda * t as f64);
            let margin = y * (dot(&w, row) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            b *= shrink;
            if margin < 1.0 {
                for (v, xi) in w.iter_mut().zip(row) {
                    *v += eta * y * xi;
                }
                b += eta * y;
            }
            let norm = (dot(&w, &w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
        }
    }
    Ok(LinearSvm { weights: w, bias: b })
}
