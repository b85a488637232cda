//! Report files. Everything written here is a pure function of the inputs,
//! so reruns with the same config produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use firealarm_core::dataset::FeatureCorrelation;
use firealarm_core::density::EnsemblePrediction;
use firealarm_core::evaluation::CSV_HEADER;
use firealarm_core::{ConfusionMatrix, EvalReport};

use crate::config::ModelKind;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct ComparisonEntry {
    pub model: ModelKind,
    pub report: EvalReport,
    pub confusion: ConfusionMatrix,
    /// Fit plus evaluation time. Printed, never written to files.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub tool_version: &'static str,
    pub dataset_fingerprint: String,
    pub config_sha256: String,
    pub data_seed: u64,
    pub smote_seed: u64,
    pub split_seed: u64,
    pub rf_seed: u64,
    pub svm_seed: u64,
    pub loaded_rows: usize,
    pub dropped_rows: usize,
    pub n_features: usize,
    pub class_counts_before_smote: [usize; 2],
    pub class_counts_after_smote: Option<[usize; 2]>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub config: String,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub entries: Vec<ComparisonEntry>,
    pub meta: RunMeta,
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::data(format!("writing {}", path.display()), e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("creating {}", dir.display()), e))
}

pub fn comparison_csv(entries: &[ComparisonEntry]) -> String {
    let mut s = format!("model,name,{CSV_HEADER}\n");
    for e in entries {
        let _ = writeln!(
            s,
            "{},{},{}",
            e.model.key(),
            e.model.display_name(),
            e.report.csv_row(&e.confusion)
        );
    }
    s
}

pub fn comparison_json(entries: &[ComparisonEntry]) -> String {
    let mut s = String::from("[\n");
    for (i, e) in entries.iter().enumerate() {
        let sep = if i + 1 == entries.len() { "" } else { "," };
        let _ = writeln!(
            s,
            "  {{\"model\": \"{}\", \"name\": \"{}\", \"metrics\": {}}}{sep}",
            e.model.key(),
            e.model.display_name(),
            e.report.to_json(&e.confusion)
        );
    }
    s.push_str("]\n");
    s
}

fn auc_text(r: &EvalReport) -> String {
    r.auc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.6}"))
}

/// Fixed-width table: accuracy, precision, recall, F1, AUC.
pub fn comparison_table(entries: &[ComparisonEntry]) -> String {
    let mut s = format!(
        "{:<24}{:>10}{:>11}{:>10}{:>10}{:>10}\n",
        "Model", "Accuracy", "Precision", "Recall", "F1", "AUC"
    );
    for e in entries {
        let r = &e.report;
        let _ = writeln!(
            s,
            "{:<24}{:>10.6}{:>11.6}{:>10.6}{:>10.6}{:>10}",
            e.model.display_name(),
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            auc_text(r)
        );
    }
    s
}

pub fn confusion_text(model: ModelKind, cm: &ConfusionMatrix) -> String {
    format!("{}\n\n{}", model.display_name(), cm.render())
}

pub fn meta_json(meta: &RunMeta) -> Result<String, CliError> {
    serde_json::to_string_pretty(meta)
        .map(|s| s + "\n")
        .map_err(|e| CliError::training("writing run metadata", e))
}

pub fn correlations_csv(rows: &[FeatureCorrelation]) -> String {
    let mut s = String::from("feature,r\n");
    for c in rows {
        let _ = writeln!(s, "{},{:.6}", c.feature, c.r);
    }
    s
}

pub fn correlations_json(rows: &[FeatureCorrelation]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|c| {
            let name = serde_json::to_string(&c.feature).unwrap_or_default();
            format!("  {{\"feature\": {name}, \"r\": {:.6}}}", c.r)
        })
        .collect();
    format!("[\n{}\n]\n", body.join(",\n"))
}

/// Horizontal bars, `#` for positive r and `-` for negative.
pub fn correlation_bars(rows: &[FeatureCorrelation]) -> String {
    const WIDTH: f64 = 40.0;
    let name_w = rows.iter().map(|c| c.feature.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in rows {
        let len = (c.r.abs() * WIDTH).round() as usize;
        let mark = if c.r >= 0.0 { "#" } else { "-" };
        let _ = writeln!(s, "{:<name_w$}  {:>9.6}  {}", c.feature, c.r, mark.repeat(len));
    }
    s
}

pub const ENSEMBLE_ROWS_HEADER: &str = "row,proba,label,actual,region,density,w_knn,w_gbt,p_knn,p_gbt";

pub fn ensemble_rows_csv(preds: &[EnsemblePrediction], actual: &[u8]) -> String {
    let mut s = format!("{ENSEMBLE_ROWS_HEADER}\n");
    for (i, (p, y)) in preds.iter().zip(actual).enumerate() {
        let _ = writeln!(
            s,
            "{i},{:.6},{},{y},{},{:.6},{},{},{:.6},{:.6}",
            p.proba, p.label, p.region, p.density, p.w_knn, p.w_gbt, p.p_knn, p.p_gbt
        );
    }
    s
}
