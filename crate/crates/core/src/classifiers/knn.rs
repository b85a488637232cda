use serde::{Deserialize, Serialize};

use super::{require_non_empty, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::{k_nearest, Neighbor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

/// Brute-force Euclidean k-nearest-neighbour vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub reference: Matrix,
    pub labels: Vec<u8>,
}

impl KnnModel {
    /// Fraction of label 1 among the first `k` of `neighbors`, which must be
    /// sorted nearest first.
    pub fn proba_from_neighbors(&self, neighbors: &[Neighbor]) -> f64 {
        let take = &neighbors[..self.k.min(neighbors.len())];
        let ones = take.iter().filter(|n| self.labels[n.index] == 1).count();
        ones as f64 / take.len() as f64
    }
}

impl ProbabilisticClassifier for KnnModel {
    fn n_features(&self) -> usize {
        self.reference.n_cols()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.proba_from_neighbors(&k_nearest(&self.reference, x, self.k, None))
    }
}

pub fn fit_knn(train: &Dataset, cfg: &KnnConfig) -> Result<KnnModel> {
    require_non_empty(train.n_rows(), ": cannot fit KNN")?;
    if cfg.k == 0 || cfg.k > train.n_rows() {
        return Err(Error::Argument(format!(
            "k = {} must lie in 1..={} (training rows)",
            cfg.k,
            train.n_rows()
        )));
    }
    Ok(KnnModel {
        k: cfg.k,
        reference: train.features().clone(),
        labels: train.labels().to_vec(),
    })
}
