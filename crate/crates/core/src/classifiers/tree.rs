//! Binary decision trees and the Gini CART learner.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, require_non_empty, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `Split` routes `x` left iff `x[feature] < threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Arena-allocated tree; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] < threshold { left } else { right },
                Node::Leaf { value } => return value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Split point strictly between two adjacent distinct sorted values.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartConfig {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl CartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::Argument("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Argument("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

/// Greedy Gini tree builder. Leaf values are the (weighted) fraction of
/// label 1. `max_features` draws that many candidate features per node.
pub(crate) struct CartBuilder<'a> {
    pub x: &'a Matrix,
    pub y: &'a [u8],
    pub weights: Option<&'a [f64]>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: Option<usize>,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

#[inline]
fn gini(w: f64, w1: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let p = w1 / w;
    2.0 * p * (1.0 - p)
}

impl CartBuilder<'_> {
    pub fn build(mut self, samples: Vec<usize>) -> Tree {
        let mut nodes = Vec::new();
        self.grow(&mut nodes, samples, 0);
        Tree { nodes }
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn grow(&mut self, nodes: &mut Vec<Node>, samples: Vec<usize>, depth: usize) -> usize {
        let id = nodes.len();
        let (w, w1) = samples.iter().fold((0.0, 0.0), |(w, w1), &i| {
            let wi = self.weight(i);
            (w + wi, w1 + wi * f64::from(self.y[i]))
        });
        let value = if w > 0.0 { w1 / w } else { 0.0 };
        nodes.push(Node::Leaf { value });

        let pure = w1 <= 0.0 || w1 >= w;
        if pure || samples.len() < self.min_samples_split || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some(choice) = self.best_split(&samples, w, w1) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.x.get(i, choice.feature) < choice.threshold);
        let l = self.grow(nodes, left, depth + 1);
        let r = self.grow(nodes, right, depth + 1);
        nodes[id] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.n_cols();
        match (self.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = index::sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    /// Best Gini decrease over midpoints of sorted distinct values; ties keep
    /// the lower feature, then the lower threshold. Zero-gain splits are
    /// allowed so patterns like XOR can be resolved at depth two.
    fn best_split(&mut self, samples: &[usize], w: f64, w1: f64) -> Option<SplitChoice> {
        let parent = gini(w, w1);
        let mut best: Option<SplitChoice> = None;
        let mut column: Vec<(f64, f64, f64)> = Vec::with_capacity(samples.len());
        for f in self.candidate_features() {
            column.clear();
            column.extend(samples.iter().map(|&i| {
                let wi = self.weight(i);
                (self.x.get(i, f), wi, wi * f64::from(self.y[i]))
            }));
            column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let (mut lw, mut lw1) = (0.0, 0.0);
            for k in 0..column.len() - 1 {
                lw += column[k].1;
                lw1 += column[k].2;
                let (v, next) = (column[k].0, column[k + 1].0);
                if next <= v {
                    continue;
                }
                let (rw, rw1) = (w - lw, w1 - lw1);
                let decrease = parent - (lw / w) * gini(lw, lw1) - (rw / w) * gini(rw, rw1);
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(SplitChoice {
                        feature: f,
                        threshold: midpoint(v, next),
                        decrease,
                    });
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub tree: Tree,
    pub n_features: usize,
}

impl ProbabilisticClassifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.tree.evaluate(x)
    }
}

pub fn fit_cart(train: &Dataset, cfg: &CartConfig) -> Result<DecisionTree> {
    cfg.validate()?;
    require_non_empty(train.n_rows(), ": cannot fit decision tree")?;
    check_dim(train.n_features(), train.features().n_cols())?;
    let builder = CartBuilder {
        x: train.features(),
        y: train.labels(),
        weights: None,
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        max_features: None,
        rng: None,
    };
    Ok(DecisionTree {
        tree: builder.build((0..train.n_rows()).collect()),
        n_features: train.n_features(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn ds(rows: &[Vec<f64>], labels: &[u8]) -> Dataset {
        Dataset::from_parts(Matrix::from_rows(rows), labels.to_vec()).unwrap()
    }

    fn train_accuracy(m: &impl ProbabilisticClassifier, d: &Dataset) -> f64 {
        let hits = d
            .features()
            .rows()
            .zip(d.labels())
            .filter(|(r, &l)| m.predict_label(r).unwrap() == l)
            .count();
        hits as f64 / d.n_rows() as f64
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let d = ds(&[vec![0.0], vec![1.0], vec![2.0]], &[1, 1, 1]);
        let m = fit_cart(&d, &CartConfig::default()).unwrap();
        assert_eq!(m.tree.nodes(), &[Node::Leaf { value: 1.0 }]);
        let d = ds(&[vec![0.0], vec![1.0]], &[0, 0]);
        let m = fit_cart(&d, &CartConfig::default()).unwrap();
        assert_eq!(m.tree.nodes(), &[Node::Leaf { value: 0.0 }]);
    }

    #[test]
    fn one_dimensional_threshold() {
        let d = ds(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &[0, 0, 1, 1]);
        // brute force over every midpoint: only 1.5 separates the classes
        let perfect: Vec<f64> = [0.5, 1.5, 2.5]
            .into_iter()
            .filter(|&t| (0..4).all(|i| u8::from(i as f64 >= t) == d.labels()[i]))
            .collect();
        assert_eq!(perfect, vec![1.5]);
        let m = fit_cart(&d, &CartConfig::default()).unwrap();
        match m.tree.nodes()[0] {
            Node::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (0, 1.5)),
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(m.tree.n_leaves(), 2);
        assert_eq!(train_accuracy(&m, &d), 1.0);
    }

    #[test]
    fn xor_resolved_at_depth_two() {
        let d = ds(
            &[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            &[0, 1, 1, 0],
        );
        let cfg = CartConfig {
            max_depth: Some(2),
            ..CartConfig::default()
        };
        let m = fit_cart(&d, &cfg).unwrap();
        assert_eq!(m.tree.depth(), 2);
        assert_eq!(train_accuracy(&m, &d), 1.0);
    }

    #[test]
    fn depth_limit_respected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let cfg = CartConfig {
            max_depth: Some(3),
            ..CartConfig::default()
        };
        let m = fit_cart(&ds(&rows, &labels), &cfg).unwrap();
        assert!(m.tree.depth() <= 3);
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let d = ds(&[vec![0.0], vec![1.0], vec![2.0]], &[0, 1, 0]);
        let cfg = CartConfig {
            max_depth: None,
            min_samples_split: 4,
        };
        let m = fit_cart(&d, &cfg).unwrap();
        assert_eq!(m.tree.nodes().len(), 1);
    }

    #[test]
    fn midpoint_of_adjacent_floats_routes_correctly() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo < t && hi >= t);
    }
}
