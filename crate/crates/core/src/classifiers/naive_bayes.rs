use serde::{Deserialize, Serialize};

use super::{require_non_empty, sigmoid, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesConfig {
    /// Variance floor as a fraction of the largest feature variance.
    pub variance_smoothing: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig {
            variance_smoothing: 1e-9,
        }
    }
}

/// Per-class Gaussian likelihoods with independent features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    fn joint_log_likelihood(&self, class: usize, x: &[f64]) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(&self.mean[class])
            .zip(&self.var[class])
            .map(|((v, m), s2)| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2))
            .sum();
        self.log_prior[class] + ll
    }

    /// Log-odds of label 1 against label 0.
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        self.joint_log_likelihood(1, x) - self.joint_log_likelihood(0, x)
    }

    /// Posterior of label 0.
    pub fn proba_complement(&self, x: &[f64]) -> f64 {
        sigmoid(-self.log_odds(x))
    }
}

impl ProbabilisticClassifier for GaussianNb {
    fn n_features(&self) -> usize {
        self.mean[0].len()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_odds(x))
    }
}

pub fn fit_gaussian_nb(train: &Dataset, cfg: &NaiveBayesConfig) -> Result<GaussianNb> {
    require_non_empty(train.n_rows(), ": cannot fit naive Bayes")?;
    if !(cfg.variance_smoothing > 0.0) {
        return Err(Error::Argument("variance_smoothing must be positive".into()));
    }
    let counts = train.class_counts();
    if counts.contains(&0) {
        return Err(Error::Fit("naive Bayes needs both classes in the training set".into()));
    }
    let n = train.n_rows() as f64;
    let d = train.n_features();
    let x = train.features();
    let y = train.labels();

    let mut mean = [vec![0.0; d], vec![0.0; d]];
    for (r, &l) in x.rows().zip(y) {
        for (m, v) in mean[l as usize].iter_mut().zip(r) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
    }
    let mut var = [vec![0.0; d], vec![0.0; d]];
    for (r, &l) in x.rows().zip(y) {
        let c = l as usize;
        for ((s, v), m) in var[c].iter_mut().zip(r).zip(&mean[c]) {
            *s += (v - m) * (v - m);
        }
    }
    for c in 0..2 {
        var[c].iter_mut().for_each(|s| *s /= counts[c] as f64);
    }

    let mut max_var: f64 = 0.0;
    for j in 0..d {
        let col = x.column(j);
        let mu = col.iter().sum::<f64>() / n;
        max_var = max_var.max(col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n);
    }
    let floor = if max_var > 0.0 {
        cfg.variance_smoothing * max_var
    } else {
        cfg.variance_smoothing
    };
    for c in 0..2 {
        var[c].iter_mut().for_each(|s| *s = s.max(floor));
    }

    Ok(GaussianNb {
        log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
        mean,
        var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn symmetric() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let neg = Normal::new(-1.0, 1.0).unwrap();
        let pos = Normal::new(1.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..2000 {
            rows.push(vec![neg.sample(&mut rng)]);
            labels.push(0);
            rows.push(vec![pos.sample(&mut rng)]);
            labels.push(1);
        }
        Dataset::from_parts(Matrix::from_rows(&rows), labels).unwrap()
    }

    #[test]
    fn symmetric_classes_meet_at_zero() {
        let m = fit_gaussian_nb(&symmetric(), &NaiveBayesConfig::default()).unwrap();
        let p = m.predict_proba(&[0.0]).unwrap();
        assert!((p - 0.5).abs() <= 0.05, "p = {p}");
        assert!(m.predict_proba(&[2.0]).unwrap() > 0.9);
    }

    #[test]
    fn posterior_sums_to_one() {
        let m = fit_gaussian_nb(&symmetric(), &NaiveBayesConfig::default()).unwrap();
        for x in [-3.0, -0.2, 0.0, 0.7, 5.0] {
            let s = m.predict_proba(&[x]).unwrap() + m.proba_complement(&[x]);
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_variance_feature_is_floored() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]];
        let d = Dataset::from_parts(Matrix::from_rows(&rows), vec![0, 0, 1, 1]).unwrap();
        let m = fit_gaussian_nb(&d, &NaiveBayesConfig::default()).unwrap();
        assert!(m.var.iter().flatten().all(|&v| v > 0.0));
        for q in [[1.0, 0.5], [2.0, 2.5], [0.0, -1.0]] {
            assert!(m.predict_proba(&q).unwrap().is_finite());
        }
    }

    #[test]
    fn single_class_is_fit_error() {
        let d = Dataset::from_parts(Matrix::from_rows(&[vec![0.0], vec![1.0]]), vec![1, 1]).unwrap();
        assert!(matches!(fit_gaussian_nb(&d, &NaiveBayesConfig::default()), Err(Error::Fit(_))));
    }
}
