use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{CartBuilder, Tree};
use super::{require_non_empty, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Candidate features drawn at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    /// `ceil(sqrt(n_features))`
    Sqrt,
    All,
    Count(usize),
}

impl FeatureSubsample {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            FeatureSubsample::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            FeatureSubsample::All => n_features,
            FeatureSubsample::Count(c) => c.min(n_features),
        }
        .max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
    /// Disabling bootstrap trains every tree on the full set in row order.
    pub bootstrap: bool,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        RandomForestConfig {
            n_trees: 100,
            max_depth: None,
            feature_subsample: FeatureSubsample::Sqrt,
            seed: 42,
            bootstrap: true,
        }
    }
}

impl RandomForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Argument("n_trees must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Argument("max_depth must be at least 1".into()));
        }
        if self.feature_subsample == FeatureSubsample::Count(0) {
            return Err(Error::Argument("feature_subsample count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

impl RandomForest {
    pub fn tree_probas(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.evaluate(x)).collect()
    }
}

impl ProbabilisticClassifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Tree `t` is grown from its own generator seeded with `seed + t`, so the
/// parallel build equals the sequential one.
pub fn fit_random_forest(train: &Dataset, cfg: &RandomForestConfig) -> Result<RandomForest> {
    cfg.validate()?;
    require_non_empty(train.n_rows(), ": cannot fit random forest")?;
    let n = train.n_rows();
    let max_features = cfg.feature_subsample.resolve(train.n_features());
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(t as u64));
            let samples: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            CartBuilder {
                x: train.features(),
                y: train.labels(),
                weights: None,
                max_depth: cfg.max_depth,
                min_samples_split: 2,
                max_features: Some(max_features),
                rng: Some(&mut rng),
            }
            .build(samples)
        })
        .collect();
    Ok(RandomForest {
        trees,
        n_features: train.n_features(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{fit_cart, CartConfig};
    use crate::dataset::generate_synthetic;

    #[test]
    fn sqrt_rounds_up() {
        assert_eq!(FeatureSubsample::Sqrt.resolve(14), 4);
        assert_eq!(FeatureSubsample::Sqrt.resolve(16), 4);
        assert_eq!(FeatureSubsample::Count(50).resolve(3), 3);
    }

    #[test]
    fn degenerate_forest_equals_cart() {
        let d = generate_synthetic(40, 0.8, 3).unwrap();
        let cfg = RandomForestConfig {
            n_trees: 1,
            feature_subsample: FeatureSubsample::All,
            bootstrap: false,
            ..RandomForestConfig::default()
        };
        let rf = fit_random_forest(&d, &cfg).unwrap();
        let cart = fit_cart(&d, &CartConfig::default()).unwrap();
        assert_eq!(rf.trees[0], cart.tree);
        for r in d.features().rows() {
            assert_eq!(rf.proba(r), cart.proba(r));
        }
    }

    #[test]
    fn proba_is_mean_of_trees() {
        let d = generate_synthetic(30, 0.5, 4).unwrap();
        let cfg = RandomForestConfig {
            n_trees: 7,
            ..RandomForestConfig::default()
        };
        let rf = fit_random_forest(&d, &cfg).unwrap();
        for r in d.features().rows().take(20) {
            let t = rf.tree_probas(r);
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            assert!((rf.proba(r) - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_determinism() {
        let d = generate_synthetic(30, 0.5, 4).unwrap();
        let cfg = RandomForestConfig {
            n_trees: 5,
            ..RandomForestConfig::default()
        };
        let a = fit_random_forest(&d, &cfg).unwrap();
        assert_eq!(a, fit_random_forest(&d, &cfg).unwrap());
        let other = RandomForestConfig { seed: 7, ..cfg };
        assert_ne!(a, fit_random_forest(&d, &other).unwrap());
    }
}
