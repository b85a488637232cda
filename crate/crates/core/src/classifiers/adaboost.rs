use serde::{Deserialize, Serialize};

use super::tree::{CartBuilder, Tree};
use super::{require_non_empty, sigmoid, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Error floor used for the vote weight of a perfect stump.
const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub n_rounds: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        AdaBoostConfig { n_rounds: 50 }
    }
}

/// Vote weight `1/2 ln((1 - eps) / eps)`; zero once `eps >= 0.5`.
pub fn adaboost_alpha(eps: f64) -> f64 {
    if eps >= 0.5 {
        return 0.0;
    }
    let eps = eps.max(MIN_ERROR);
    0.5 * ((1.0 - eps) / eps).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedStump {
    pub stump: Tree,
    pub alpha: f64,
}

impl WeightedStump {
    /// Stump vote in {-1, +1}.
    #[inline]
    fn vote(&self, x: &[f64]) -> f64 {
        if self.stump.evaluate(x) >= 0.5 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<WeightedStump>,
    pub n_features: usize,
}

impl AdaBoost {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.alpha * s.vote(x)).sum()
    }
}

impl ProbabilisticClassifier for AdaBoost {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(2.0 * self.margin(x))
    }
}

/// Discrete AdaBoost over weighted Gini stumps. Stops early when a stump is
/// no better than chance or classifies the weighted set perfectly.
pub fn fit_adaboost(train: &Dataset, cfg: &AdaBoostConfig) -> Result<AdaBoost> {
    if cfg.n_rounds == 0 {
        return Err(Error::Argument("n_rounds must be at least 1".into()));
    }
    require_non_empty(train.n_rows(), ": cannot fit AdaBoost")?;
    let n = train.n_rows();
    let x = train.features();
    let y = train.labels();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();

    for round in 0..cfg.n_rounds {
        let stump = CartBuilder {
            x,
            y,
            weights: Some(&weights),
            max_depth: Some(1),
            min_samples_split: 2,
            max_features: None,
            rng: None,
        }
        .build((0..n).collect());
        let mut candidate = WeightedStump { stump, alpha: 0.0 };
        let votes: Vec<f64> = x.rows().map(|r| candidate.vote(r)).collect();
        let total: f64 = weights.iter().sum();
        let wrong: f64 = votes
            .iter()
            .zip(y)
            .zip(&weights)
            .filter(|((&v, &l), _)| (v > 0.0) != (l == 1))
            .map(|(_, w)| w)
            .sum();
        let eps = wrong / total;
        log::debug!("adaboost round {round}: weighted error {eps:.6}");
        if eps >= 0.5 {
            break;
        }
        candidate.alpha = adaboost_alpha(eps);
        if eps <= 0.0 {
            stumps.push(candidate);
            break;
        }
        for ((w, &v), &l) in weights.iter_mut().zip(&votes).zip(y) {
            let ypm = if l == 1 { 1.0 } else { -1.0 };
            *w *= (-candidate.alpha * ypm * v).exp();
        }
        let z: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= z);
        stumps.push(candidate);
    }
    Ok(AdaBoost {
        stumps,
        n_features: train.n_features(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn alpha_formula() {
        assert_eq!(adaboost_alpha(0.5), 0.0);
        assert_eq!(adaboost_alpha(0.7), 0.0);
        // 1/2 ln 9
        assert!((adaboost_alpha(0.1) - 1.0986122886681098).abs() < 1e-12);
        assert!(adaboost_alpha(0.0).is_finite());
    }

    #[test]
    fn separable_data_fits_quickly() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i >= 8)).collect();
        let d = Dataset::from_parts(Matrix::from_rows(&rows), labels).unwrap();
        let m = fit_adaboost(&d, &AdaBoostConfig { n_rounds: 5 }).unwrap();
        assert!(m.stumps.len() <= 5);
        for (r, &l) in d.features().rows().zip(d.labels()) {
            assert_eq!(m.predict_label(r).unwrap(), l);
        }
    }

    #[test]
    fn interval_needs_several_rounds() {
        // label 1 inside [5, 10): no single stump separates it
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..16).map(|i| u8::from((5..10).contains(&i))).collect();
        let d = Dataset::from_parts(Matrix::from_rows(&rows), labels).unwrap();
        let m = fit_adaboost(&d, &AdaBoostConfig { n_rounds: 30 }).unwrap();
        assert!(m.stumps.len() > 1);
        let acc = d
            .features()
            .rows()
            .zip(d.labels())
            .filter(|(r, &l)| m.predict_label(r).unwrap() == l)
            .count();
        assert_eq!(acc, 16);
    }

    #[test]
    fn chance_level_stops_immediately() {
        // identical features, mixed labels: the stump cannot split
        let rows = vec![vec![1.0]; 4];
        let d = Dataset::from_parts(Matrix::from_rows(&rows), vec![0, 1, 0, 1]).unwrap();
        let m = fit_adaboost(&d, &AdaBoostConfig::default()).unwrap();
        assert!(m.stumps.is_empty());
        assert_eq!(m.proba(&[1.0]), 0.5);
    }
}
