//! Second-order gradient boosting of regression trees on the logistic loss.
//!
//! Trees are grown level by level with exact greedy split search: every
//! feature is pre-sorted once, and one pass over a feature's sorted order
//! evaluates every candidate threshold for every open node at that level.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use super::{require_non_empty, sigmoid, ProbabilisticClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Base rates are clipped away from 0 and 1 before taking the log-odds.
const BASE_RATE_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    /// Shrinkage applied to every tree.
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub l2: f64,
    /// Minimum gain a split must exceed.
    pub min_split_gain: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            n_rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            l2: 1.0,
            min_split_gain: 0.0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 || self.max_depth == 0 {
            return Err(Error::Argument("n_rounds and max_depth must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument("learning_rate must be positive".into()));
        }
        if !(self.l2 >= 0.0) || !(self.min_split_gain >= 0.0) {
            return Err(Error::Argument("l2 and min_split_gain must be non-negative".into()));
        }
        Ok(())
    }
}

/// Optimal leaf weight `-G / (H + lambda)`.
pub fn leaf_weight(g: f64, h: f64, l2: f64) -> f64 {
    let denom = h + l2;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, l2: f64) -> f64 {
    let denom = h + l2;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

/// Structure gain of splitting `(G, H)` into left `(gl, hl)` and the rest.
pub fn split_gain(g: f64, h: f64, gl: f64, hl: f64, l2: f64, gamma: f64) -> f64 {
    let (gr, hr) = (g - gl, h - hl);
    0.5 * (score(gl, hl, l2) + score(gr, hr, l2) - score(g, h, l2)) - gamma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

impl GradientBoostedTrees {
    /// Raw additive score (log-odds).
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |f, t| f + self.learning_rate * t.evaluate(x))
    }
}

impl ProbabilisticClassifier for GradientBoostedTrees {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }
}

/// Mean logistic loss of raw scores `f` against labels.
pub fn log_loss_from_scores(f: &[f64], y: &[u8]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(y)
        .map(|(&z, &l)| z.max(0.0) + (-z.abs()).exp().ln_1p() - f64::from(l) * z)
        .sum();
    total / f.len() as f64
}

pub fn fit_gbt(train: &Dataset, cfg: &GbtConfig) -> Result<GradientBoostedTrees> {
    fit_gbt_traced(train, cfg, |_, _| {})
}

/// Fits the model, calling `on_round(round, scores)` with the training raw
/// scores after every round.
pub fn fit_gbt_traced(
    train: &Dataset,
    cfg: &GbtConfig,
    mut on_round: impl FnMut(usize, &[f64]),
) -> Result<GradientBoostedTrees> {
    cfg.validate()?;
    require_non_empty(train.n_rows(), ": cannot fit gradient boosting")?;
    let x = train.features();
    let y = train.labels();
    let n = y.len();
    let p_bar = (y.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64).clamp(BASE_RATE_CLIP, 1.0 - BASE_RATE_CLIP);
    let base_score = (p_bar / (1.0 - p_bar)).ln();

    let sorted = presort(x);
    let mut scores = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut grower = LevelGrower::new(x, &sorted, cfg);

    for round in 0..cfg.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - f64::from(y[i]);
            hess[i] = p * (1.0 - p);
        }
        let tree = grower.grow(&grad, &hess);
        for (i, s) in scores.iter_mut().enumerate() {
            *s += cfg.learning_rate * tree.evaluate(x.row(i));
        }
        trees.push(tree);
        on_round(round, &scores);
    }
    Ok(GradientBoostedTrees {
        base_score,
        learning_rate: cfg.learning_rate,
        trees,
        n_features: train.n_features(),
    })
}

/// Row indices ordered by each feature's value, ties by row index.
fn presort(x: &Matrix) -> Vec<Vec<u32>> {
    (0..x.n_cols())
        .map(|f| {
            let mut idx: Vec<u32> = (0..x.n_rows() as u32).collect();
            idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

const CLOSED: u32 = u32::MAX;

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct OpenNode {
    node: usize,
    g: f64,
    h: f64,
    best: Option<Candidate>,
    // per-feature scan state
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
}

struct LevelGrower<'a> {
    x: &'a Matrix,
    sorted: &'a [Vec<u32>],
    cfg: &'a GbtConfig,
    slot: Vec<u32>,
}

impl<'a> LevelGrower<'a> {
    fn new(x: &'a Matrix, sorted: &'a [Vec<u32>], cfg: &'a GbtConfig) -> Self {
        LevelGrower {
            x,
            sorted,
            cfg,
            slot: vec![0; x.n_rows()],
        }
    }

    fn grow(&mut self, grad: &[f64], hess: &[f64]) -> Tree {
        let l2 = self.cfg.l2;
        self.slot.iter_mut().for_each(|s| *s = 0);
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut open = vec![OpenNode::new(0, grad.iter().sum(), hess.iter().sum())];

        for depth in 0..=self.cfg.max_depth {
            if open.is_empty() {
                break;
            }
            if depth < self.cfg.max_depth {
                self.find_splits(&mut open, grad, hess);
            }
            let mut next = Vec::new();
            // old slot -> (left slot, right slot, feature, threshold)
            let mut routes: Vec<Option<(u32, u32, usize, f64)>> = Vec::with_capacity(open.len());
            for o in &open {
                match &o.best {
                    Some(c) if c.gain > 0.0 => {
                        let (l, r) = (nodes.len(), nodes.len() + 1);
                        nodes.push(Node::Leaf { value: 0.0 });
                        nodes.push(Node::Leaf { value: 0.0 });
                        nodes[o.node] = Node::Split {
                            feature: c.feature,
                            threshold: c.threshold,
                            left: l,
                            right: r,
                        };
                        routes.push(Some((next.len() as u32, next.len() as u32 + 1, c.feature, c.threshold)));
                        next.push(OpenNode::new(l, 0.0, 0.0));
                        next.push(OpenNode::new(r, 0.0, 0.0));
                    }
                    _ => {
                        nodes[o.node] = Node::Leaf {
                            value: leaf_weight(o.g, o.h, l2),
                        };
                        routes.push(None);
                    }
                }
            }
            for (i, s) in self.slot.iter_mut().enumerate() {
                if *s == CLOSED {
                    continue;
                }
                *s = match routes[*s as usize] {
                    Some((l, r, f, t)) => {
                        let child = if self.x.get(i, f) < t { l } else { r };
                        next[child as usize].g += grad[i];
                        next[child as usize].h += hess[i];
                        child
                    }
                    None => CLOSED,
                };
            }
            open = next;
        }
        Tree { nodes }
    }

    /// Scans every feature once in sorted order, scoring each boundary between
    /// distinct values for the node the row belongs to. Strict improvement
    /// keeps the lowest feature and threshold on ties.
    fn find_splits(&self, open: &mut [OpenNode], grad: &[f64], hess: &[f64]) {
        let (l2, gamma) = (self.cfg.l2, self.cfg.min_split_gain);
        for (f, order) in self.sorted.iter().enumerate() {
            for o in open.iter_mut() {
                o.gl = 0.0;
                o.hl = 0.0;
                o.seen = false;
            }
            for &i in order {
                let i = i as usize;
                let s = self.slot[i];
                if s == CLOSED {
                    continue;
                }
                let o = &mut open[s as usize];
                let v = self.x.get(i, f);
                if o.seen && v > o.last {
                    let gain = split_gain(o.g, o.h, o.gl, o.hl, l2, gamma);
                    if o.best.as_ref().is_none_or(|b| gain > b.gain) {
                        o.best = Some(Candidate {
                            gain,
                            feature: f,
                            threshold: midpoint(o.last, v),
                        });
                    }
                }
                o.gl += grad[i];
                o.hl += hess[i];
                o.last = v;
                o.seen = true;
            }
        }
    }
}

impl OpenNode {
    fn new(node: usize, g: f64, h: f64) -> Self {
        OpenNode {
            node,
            g,
            h,
            best: None,
            gl: 0.0,
            hl: 0.0,
            last: 0.0,
            seen: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn leaf_weight_hand_value() {
        // 4 samples, y = 1, p = 0.5: g = -0.5 each, h = 0.25 each
        let (g, h) = (4.0 * -0.5, 4.0 * 0.25);
        assert_eq!((g, h), (-2.0, 1.0));
        assert_eq!(leaf_weight(g, h, 1.0), 1.0);
    }

    #[test]
    fn identical_gradients_never_split() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        // all labels equal and base rate clipped: every row has the same g, h
        let d = Dataset::from_parts(Matrix::from_rows(&rows), vec![1; 8]).unwrap();
        let m = fit_gbt(&d, &GbtConfig { n_rounds: 3, ..GbtConfig::default() }).unwrap();
        for t in &m.trees {
            assert_eq!(t.nodes().len(), 1);
        }
        // the gain formula itself: any split of identical rows is <= -gamma
        let (g, h) = (8.0 * -0.3, 8.0 * 0.21);
        for k in 1..8 {
            let k = f64::from(k);
            let gain = split_gain(g, h, k * -0.3, k * 0.21, 1.0, 0.1);
            assert!(gain <= -0.1 + 1e-12, "gain {gain}");
        }
    }

    #[test]
    fn separates_threshold_data() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i), f64::from(i % 3)]).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i >= 22)).collect();
        let d = Dataset::from_parts(Matrix::from_rows(&rows), labels).unwrap();
        let m = fit_gbt(&d, &GbtConfig { n_rounds: 10, ..GbtConfig::default() }).unwrap();
        match m.trees[0].nodes()[0] {
            Node::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (0, 21.5)),
            other => panic!("expected split, got {other:?}"),
        }
        for (r, &l) in d.features().rows().zip(d.labels()) {
            assert_eq!(m.predict_label(r).unwrap(), l);
        }
    }

    #[test]
    fn training_loss_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let n = rng.random_range(20..120);
            let d = rng.random_range(1..5);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let data = Dataset::from_parts(Matrix::from_rows(&rows), labels.clone()).unwrap();
            let cfg = GbtConfig {
                n_rounds: 30,
                learning_rate: rng.random_range(0.05..0.3),
                l2: rng.random_range(0.0..2.0),
                ..GbtConfig::default()
            };
            let mut losses = Vec::new();
            fit_gbt_traced(&data, &cfg, |_, f| losses.push(log_loss_from_scores(f, &labels))).unwrap();
            for w in losses.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "trial {trial}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn depth_is_bounded() {
        let d = generate_synthetic(60, 0.3, 2).unwrap();
        let cfg = GbtConfig {
            n_rounds: 5,
            max_depth: 3,
            ..GbtConfig::default()
        };
        let m = fit_gbt(&d, &cfg).unwrap();
        assert!(m.trees.iter().all(|t| t.depth() <= 3));
        assert!(m.trees.iter().any(|t| t.depth() == 3));
    }

    /// Exhaustive single-node split search used as an oracle for the level
    /// scan: enumerate every (feature, distinct-value boundary).
    fn brute_root_split(x: &Matrix, g: &[f64], h: &[f64], l2: f64) -> Option<(usize, f64, f64)> {
        let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..x.n_cols() {
            let mut vals = x.column(f);
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = midpoint(w[0], w[1]);
                let (mut gl, mut hl) = (0.0, 0.0);
                for i in 0..x.n_rows() {
                    if x.get(i, f) < t {
                        gl += g[i];
                        hl += h[i];
                    }
                }
                let gain = split_gain(gt, ht, gl, hl, l2, 0.0);
                if best.is_none_or(|b| gain > b.2 + 1e-12) {
                    best = Some((f, t, gain));
                }
            }
        }
        best
    }

    #[test]
    fn root_split_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..3).map(|_| f64::from(rng.random_range(0..6))).collect())
                .collect();
            let x = Matrix::from_rows(&rows);
            let g: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..30).map(|_| rng.random_range(0.05..0.25)).collect();
            let sorted = presort(&x);
            let cfg = GbtConfig {
                max_depth: 1,
                ..GbtConfig::default()
            };
            let tree = LevelGrower::new(&x, &sorted, &cfg).grow(&g, &h);
            let oracle = brute_root_split(&x, &g, &h, cfg.l2);
            match (tree.nodes()[0], oracle) {
                (Node::Split { feature, threshold, .. }, Some((f, t, gain))) if gain > 0.0 => {
                    assert_eq!((feature, threshold), (f, t));
                }
                (Node::Leaf { .. }, None) => {}
                (Node::Leaf { .. }, Some((_, _, gain))) => assert!(gain <= 0.0),
                (node, oracle) => panic!("{node:?} vs {oracle:?}"),
            }
        }
    }
}
