//! Local-density weighted ensemble of KNN and gradient-boosted trees.
//!
//! Each point gets a density score (inverse mean distance to its nearest
//! training points). Points at or above the median training density fall in
//! the HIGH region, where KNN gets the larger weight; the rest are LOW,
//! where the boosted trees dominate.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    check_dim, fit_gbt, fit_knn, GbtConfig, GradientBoostedTrees, KnnConfig, KnnModel, ProbabilisticClassifier,
    DECISION_THRESHOLD,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::{k_nearest, Neighbor};

pub const DENSITY_EPSILON: f64 = 1e-9;

fn density_from_neighbors(neighbors: &[Neighbor]) -> f64 {
    let mean = neighbors.iter().map(Neighbor::dist).sum::<f64>() / neighbors.len() as f64;
    1.0 / (DENSITY_EPSILON + mean)
}

/// `1 / (eps + mean distance to the k nearest reference rows)`.
pub fn estimate_density(reference: &Matrix, query: &[f64], k_density: usize) -> Result<f64> {
    check_dim(reference.n_cols(), query.len())?;
    if k_density == 0 || k_density > reference.n_rows() {
        return Err(Error::Argument(format!(
            "k_density = {k_density} must lie in 1..={}",
            reference.n_rows()
        )));
    }
    Ok(density_from_neighbors(&k_nearest(reference, query, k_density, None)))
}

/// Median with the mean-of-middle-two convention. Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    High,
    Low,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::High => "HIGH",
            Region::Low => "LOW",
        })
    }
}

/// Training densities (self excluded) and the median threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub reference: Matrix,
    pub k_density: usize,
    pub densities: Vec<f64>,
    pub threshold: f64,
}

impl DensityProfile {
    pub fn fit(reference: Matrix, k_density: usize) -> Result<Self> {
        let n = reference.n_rows();
        if k_density == 0 || k_density >= n {
            return Err(Error::Argument(format!(
                "k_density = {k_density} must lie in 1..={} (reference rows minus self)",
                n.saturating_sub(1)
            )));
        }
        let densities: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| density_from_neighbors(&k_nearest(&reference, reference.row(i), k_density, Some(i))))
            .collect();
        let threshold = median(&densities);
        Ok(DensityProfile {
            reference,
            k_density,
            densities,
            threshold,
        })
    }

    pub fn density(&self, query: &[f64]) -> Result<f64> {
        estimate_density(&self.reference, query, self.k_density)
    }

    /// HIGH iff `density >= threshold`.
    pub fn region_of(&self, density: f64) -> Region {
        if density >= self.threshold {
            Region::High
        } else {
            Region::Low
        }
    }

    pub fn classify_region(&self, query: &[f64]) -> Result<Region> {
        Ok(self.region_of(self.density(query)?))
    }

    /// Regions of the reference rows themselves.
    pub fn partition_regions(&self) -> Vec<Region> {
        self.densities.iter().map(|&d| self.region_of(d)).collect()
    }
}

/// KNN weight per region; the boosted trees get the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionWeights {
    pub alpha_high: f64,
    pub alpha_low: f64,
}

impl Default for RegionWeights {
    fn default() -> Self {
        RegionWeights {
            alpha_high: 0.7,
            alpha_low: 0.3,
        }
    }
}

impl RegionWeights {
    pub fn new(alpha_high: f64, alpha_low: f64) -> Result<Self> {
        let rw = RegionWeights { alpha_high, alpha_low };
        rw.validate()?;
        Ok(rw)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.alpha_high) || !unit.contains(&self.alpha_low) {
            return Err(Error::Argument("region weights must lie in [0, 1]".into()));
        }
        if self.alpha_high < self.alpha_low {
            return Err(Error::Argument(format!(
                "alpha_high ({}) must be >= alpha_low ({})",
                self.alpha_high, self.alpha_low
            )));
        }
        Ok(())
    }
}

/// `(w_knn, w_gbt)` for a region.
pub fn assign_weights(region: Region, rw: &RegionWeights) -> (f64, f64) {
    let alpha = match region {
        Region::High => rw.alpha_high,
        Region::Low => rw.alpha_low,
    };
    (alpha, 1.0 - alpha)
}

/// Convex combination, clamped so rounding never leaves `[min, max]` of the
/// two inputs.
pub fn combine(p_knn: f64, p_gbt: f64, w_knn: f64, w_gbt: f64) -> f64 {
    (w_knn * p_knn + w_gbt * p_gbt).clamp(p_knn.min(p_gbt), p_knn.max(p_gbt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub knn: KnnConfig,
    pub gbt: GbtConfig,
    pub k_density: usize,
    pub weights: RegionWeights,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            knn: KnnConfig::default(),
            gbt: GbtConfig::default(),
            k_density: 10,
            weights: RegionWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnsembleModel {
    pub knn: KnnModel,
    pub gbt: GradientBoostedTrees,
    pub profile: DensityProfile,
    pub weights: RegionWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsemblePrediction {
    pub proba: f64,
    pub label: u8,
    pub region: Region,
    pub density: f64,
    pub w_knn: f64,
    pub w_gbt: f64,
    pub p_knn: f64,
    pub p_gbt: f64,
}

/// Fits KNN, the boosted trees and the density profile on the same
/// training partition.
pub fn ensemble_fit(train: &Dataset, cfg: &EnsembleConfig) -> Result<WeightedEnsembleModel> {
    cfg.weights.validate()?;
    let knn = fit_knn(train, &cfg.knn)?;
    let gbt = fit_gbt(train, &cfg.gbt)?;
    let profile = DensityProfile::fit(train.features().clone(), cfg.k_density)?;
    Ok(WeightedEnsembleModel {
        knn,
        gbt,
        profile,
        weights: cfg.weights,
    })
}

impl WeightedEnsembleModel {
    pub fn predict(&self, x: &[f64]) -> Result<EnsemblePrediction> {
        check_dim(self.n_features(), x.len())?;
        Ok(self.predict_unchecked(x))
    }

    /// KNN and the density estimate share one neighbour search: both use the
    /// training rows, so the shorter list is a prefix of the longer one.
    fn predict_unchecked(&self, x: &[f64]) -> EnsemblePrediction {
        let k_max = self.knn.k.max(self.profile.k_density);
        let neighbors = k_nearest(&self.profile.reference, x, k_max, None);
        let p_knn = self.knn.proba_from_neighbors(&neighbors[..self.knn.k]);
        let density = density_from_neighbors(&neighbors[..self.profile.k_density]);
        let region = self.profile.region_of(density);
        let (w_knn, w_gbt) = assign_weights(region, &self.weights);
        let p_gbt = self.gbt.proba(x);
        let proba = combine(p_knn, p_gbt, w_knn, w_gbt);
        EnsemblePrediction {
            proba,
            label: u8::from(proba >= DECISION_THRESHOLD),
            region,
            density,
            w_knn,
            w_gbt,
            p_knn,
            p_gbt,
        }
    }

    pub fn predict_batch(&self, rows: &Matrix) -> Result<Vec<EnsemblePrediction>> {
        check_dim(self.n_features(), rows.n_cols())?;
        Ok((0..rows.n_rows())
            .into_par_iter()
            .map(|i| self.predict_unchecked(rows.row(i)))
            .collect())
    }
}

impl ProbabilisticClassifier for WeightedEnsembleModel {
    fn n_features(&self) -> usize {
        self.profile.reference.n_cols()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.predict_unchecked(x).proba
    }
}
