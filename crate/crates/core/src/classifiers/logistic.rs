use serde::{Deserialize, Serialize};

use super::{require_non_empty, sigmoid, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.1,
            epochs: 500,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ProbabilisticClassifier for LogisticRegression {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

/// Mean log-loss plus `l2/2 * |w|^2`, with its gradient in `w` and `b`.
pub fn logistic_loss_grad(weights: &[f64], bias: f64, x: &Matrix, y: &[u8], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let z = dot(weights, row) + bias;
        let t = f64::from(label);
        // log(1 + e^z) - t z, computed without overflow
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    loss /= n;
    loss += 0.5 * l2 * dot(weights, weights);
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss, gw, gb / n)
}

/// Full-batch gradient descent from zero weights.
pub fn fit_logistic(train: &Dataset, cfg: &LogisticConfig) -> Result<LogisticRegression> {
    if !(cfg.learning_rate > 0.0) || !(cfg.l2 >= 0.0) {
        return Err(Error::Argument("learning_rate must be positive and l2 non-negative".into()));
    }
    require_non_empty(train.n_rows(), ": cannot fit logistic regression")?;
    let mut weights = vec![0.0; train.n_features()];
    let mut bias = 0.0;
    for epoch in 0..cfg.epochs {
        let (loss, gw, gb) = logistic_loss_grad(&weights, bias, train.features(), train.labels(), cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        bias -= cfg.learning_rate * gb;
    }
    if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Divergence { epoch: cfg.epochs });
    }
    Ok(LogisticRegression { weights, bias })
}
