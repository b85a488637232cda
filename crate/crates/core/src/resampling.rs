//! SMOTE oversampling of the minority class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::k_nearest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetCount {
    MatchMajority,
    Explicit(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target_count: TargetCount,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_count: TargetCount::MatchMajority,
            seed: 42,
        }
    }
}

/// `x + u * (neighbor - x)`.
pub fn interpolate(x: &[f64], neighbor: &[f64], u: f64) -> Vec<f64> {
    x.iter().zip(neighbor).map(|(a, b)| a + u * (b - a)).collect()
}

/// Balances the classes by appending synthetic minority rows after the
/// originals. Parents are taken round-robin over the minority rows; each
/// synthetic row lies on the segment between its parent and one of the
/// parent's `k` nearest minority neighbours.
pub fn smote_oversample(d: &Dataset, cfg: &SmoteConfig) -> Result<Dataset> {
    if cfg.k_neighbors == 0 {
        return Err(Error::Argument("k_neighbors must be at least 1".into()));
    }
    let counts = d.class_counts();
    if counts[0] == counts[1] && cfg.target_count == TargetCount::MatchMajority {
        return Ok(d.clone());
    }
    let minority_label: u8 = if counts[1] < counts[0] { 1 } else { 0 };
    let minority_count = counts[minority_label as usize];
    let target = match cfg.target_count {
        TargetCount::MatchMajority => counts[1 - minority_label as usize],
        TargetCount::Explicit(t) if t < minority_count => {
            return Err(Error::Argument(format!(
                "target count {t} is below the minority count {minority_count}"
            )))
        }
        TargetCount::Explicit(t) => t,
    };
    if target == minority_count {
        return Ok(d.clone());
    }
    if minority_count < 2 {
        return Err(Error::Resampling(format!(
            "minority class has {minority_count} sample(s); at least 2 are needed"
        )));
    }
    let mut k = cfg.k_neighbors;
    if k > minority_count - 1 {
        log::warn!("SMOTE k={k} exceeds minority count - 1; clamping to {}", minority_count - 1);
        k = minority_count - 1;
    }

    let minority_rows: Vec<usize> = (0..d.n_rows()).filter(|&i| d.labels()[i] == minority_label).collect();
    let minority = d.features().select_rows(&minority_rows);
    let n_synthetic = target - minority_count;
    let n_parents = n_synthetic.min(minority_count);

    let neighbors: Vec<Vec<usize>> = (0..n_parents)
        .into_par_iter()
        .map(|p| {
            k_nearest(&minority, minority.row(p), k, Some(p))
                .into_iter()
                .map(|n| n.index)
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut synthetic = Matrix::empty(d.n_features());
    for s in 0..n_synthetic {
        let parent = s % minority_count;
        let nn = neighbors[parent][rng.random_range(0..k)];
        let u: f64 = rng.random();
        synthetic.push_row(&interpolate(minority.row(parent), minority.row(nn), u));
    }
    let mut out = d.clone();
    out.extend_rows(&synthetic, minority_label);
    Ok(out)
}
