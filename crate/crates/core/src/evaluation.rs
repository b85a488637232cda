//! Confusion matrices, threshold metrics and rank-based AUC.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ProbabilisticClassifier, DECISION_THRESHOLD};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// 2x2 counts with label 1 (Fire Alarm) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Matrix with predicted labels inverted.
    pub fn flip_predictions(&self) -> Self {
        ConfusionMatrix {
            tp: self.fn_,
            fn_: self.tp,
            fp: self.tn,
            tn: self.fp,
        }
    }

    /// Rows actual, columns predicted; No Alarm first.
    pub fn render(&self) -> String {
        let w = [self.tn, self.fp, self.fn_, self.tp]
            .iter()
            .map(|c| c.to_string().len())
            .max()
            .unwrap_or(1)
            .max("Predicted: No Alarm".len());
        let mut s = String::new();
        let _ = writeln!(s, "{:<18}  {:>w$}  {:>w$}", "", "Predicted: No Alarm", "Predicted: Alarm");
        let _ = writeln!(s, "{:<18}  {:>w$}  {:>w$}", "Actual: No Alarm", self.tn, self.fp);
        let _ = writeln!(s, "{:<18}  {:>w$}  {:>w$}", "Actual: Alarm", self.fn_, self.tp);
        s
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Metric(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Metric("no predictions to tabulate".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&l, &p) in labels.iter().zip(predictions) {
        match (l == 1, p == 1) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// The seven reported metrics. Metrics whose denominator vanishes are 0 and
/// listed in `undefined`. `auc` is absent when only a confusion matrix is
/// known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub kappa: f64,
    pub mcc: f64,
    pub undefined: Vec<String>,
}

fn ratio(num: f64, den: f64, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num / den
    }
}

pub fn metrics_from_cm(cm: &ConfusionMatrix) -> Result<EvalReport> {
    if cm.total() == 0 {
        return Err(Error::Metric("empty confusion matrix".into()));
    }
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let n = tp + fp + fn_ + tn;
    let mut undefined = Vec::new();

    let accuracy = (tp + tn) / n;
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
    let f1 = ratio(2.0 * precision * recall, precision + recall, "f1", &mut undefined);

    let p_o = accuracy;
    let p_e = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
    let kappa = ratio(p_o - p_e, 1.0 - p_e, "kappa", &mut undefined);

    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio(tp * tn - fp * fn_, den, "mcc", &mut undefined);

    Ok(EvalReport {
        accuracy,
        precision,
        recall,
        f1,
        auc: None,
        kappa,
        mcc,
        undefined,
    })
}

/// Mann-Whitney AUC: the share of (positive, negative) pairs ranked
/// correctly, ties counting one half. Uses average ranks, O(n log n).
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("AUC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share their average
        let avg = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        pos_rank_sum += avg * pos_in_group as f64;
        i = j;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub confusion: ConfusionMatrix,
    pub scores: Vec<f64>,
}

/// Scores every test row, thresholds at 0.5 and computes all seven metrics.
pub fn evaluate_scores(scores: Vec<f64>, labels: &[u8]) -> Result<Evaluation> {
    let predictions: Vec<u8> = scores.iter().map(|&p| u8::from(p >= DECISION_THRESHOLD)).collect();
    let confusion = confusion(labels, &predictions)?;
    let mut report = metrics_from_cm(&confusion)?;
    report.auc = Some(auc_roc(&scores, labels)?);
    Ok(Evaluation {
        report,
        confusion,
        scores,
    })
}

pub fn evaluate_model(model: &dyn ProbabilisticClassifier, test: &Dataset) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyDataset(": nothing to evaluate"));
    }
    let scores = model.predict_proba_batch(test.features())?;
    evaluate_scores(scores, test.labels())
}

/// Report and matrix rendered with six decimals.
pub const CSV_HEADER: &str = "accuracy,precision,recall,f1,auc,kappa,mcc,tp,fp,fn,tn";

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

impl EvalReport {
    pub fn csv_row(&self, cm: &ConfusionMatrix) -> String {
        let auc = self.auc.map_or_else(String::new, fmt6);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt6(self.accuracy),
            fmt6(self.precision),
            fmt6(self.recall),
            fmt6(self.f1),
            auc,
            fmt6(self.kappa),
            fmt6(self.mcc),
            cm.tp,
            cm.fp,
            cm.fn_,
            cm.tn
        )
    }

    /// Flat JSON object with fixed key order; numbers at six decimals.
    pub fn to_json(&self, cm: &ConfusionMatrix) -> String {
        let auc = self.auc.map_or_else(|| "null".to_string(), fmt6);
        let undefined = serde_json::to_string(&self.undefined).unwrap_or_else(|_| "[]".into());
        format!(
            "{{\"accuracy\": {}, \"precision\": {}, \"recall\": {}, \"f1\": {}, \"auc\": {}, \"kappa\": {}, \"mcc\": {}, \"tp\": {}, \"fp\": {}, \"fn\": {}, \"tn\": {}, \"undefined\": {}}}",
            fmt6(self.accuracy),
            fmt6(self.precision),
            fmt6(self.recall),
            fmt6(self.f1),
            auc,
            fmt6(self.kappa),
            fmt6(self.mcc),
            cm.tp,
            cm.fp,
            cm.fn_,
            cm.tn,
            undefined
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let auc = self.auc.map_or_else(|| "n/a".to_string(), fmt6);
        for (name, value) in [
            ("Accuracy", fmt6(self.accuracy)),
            ("Precision", fmt6(self.precision)),
            ("Recall", fmt6(self.recall)),
            ("F1 score", fmt6(self.f1)),
            ("AUC", auc),
            ("Cohen's kappa", fmt6(self.kappa)),
            ("Matthews corr. coef.", fmt6(self.mcc)),
        ] {
            let _ = writeln!(s, "{name:<22}{value}");
        }
        if !self.undefined.is_empty() {
            let _ = writeln!(s, "undefined (reported as 0): {}", self.undefined.join(", "));
        }
        s
    }
}
