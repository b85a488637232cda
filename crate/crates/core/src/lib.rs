//! From-scratch toolkit for smoke-detector alarm classification: dataset
//! preparation, SMOTE, eight baseline classifiers, a local-density weighted
//! KNN/boosted-trees ensemble, and binary classification metrics.

pub mod classifiers;
pub mod dataset;
pub mod density;
pub mod error;
pub mod evaluation;
pub mod matrix;
pub mod neighbors;
pub mod persist;
pub mod resampling;

pub use classifiers::{Model, ProbabilisticClassifier};
pub use dataset::{ColumnSchema, Dataset};
pub use density::{ensemble_fit, EnsembleConfig, WeightedEnsembleModel};
pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, EvalReport};
pub use matrix::Matrix;
