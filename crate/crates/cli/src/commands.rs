use std::io::Write;
use std::time::Instant;

use sha2::{Digest, Sha256};

use firealarm_core::dataset::{feature_target_correlation, FeatureCorrelation};
use firealarm_core::evaluation::{evaluate_model, evaluate_scores, metrics_from_cm, CSV_HEADER};
use firealarm_core::persist;
use firealarm_core::{ConfusionMatrix, EvalReport, WeightedEnsembleModel};

use crate::config::{ModelKind, OutputFormat, RunConfig};
use crate::error::CliError;
use crate::pipeline::{self, Fitted, Prepared};
use crate::report::{self, ComparisonEntry, ComparisonReport, RunMeta};

fn out_err(e: std::io::Error) -> CliError {
    CliError::data("writing to stdout", e)
}

fn fmt_counts(c: [usize; 2]) -> String {
    format!("No Alarm {} / Fire Alarm {}", c[0], c[1])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InspectSummary {
    pub loaded_rows: usize,
    pub dropped_rows: usize,
    pub n_features: usize,
    pub counts_before: [usize; 2],
    pub counts_after: Option<[usize; 2]>,
    pub train_rows: usize,
    pub test_rows: usize,
}

pub fn inspect(cfg: &RunConfig, out: &mut dyn Write) -> Result<InspectSummary, CliError> {
    let p = pipeline::prepare(cfg)?;
    let s = InspectSummary {
        loaded_rows: p.loaded_rows,
        dropped_rows: p.dropped_rows,
        n_features: p.n_features,
        counts_before: p.counts_before,
        counts_after: p.counts_after,
        train_rows: p.train.n_rows(),
        test_rows: p.test.n_rows(),
    };
    (|| -> std::io::Result<()> {
        writeln!(out, "rows loaded:          {}", s.loaded_rows)?;
        writeln!(out, "rows dropped:         {}", s.dropped_rows)?;
        writeln!(out, "features:             {}", s.n_features)?;
        writeln!(out, "classes before SMOTE: {}", fmt_counts(s.counts_before))?;
        match s.counts_after {
            Some(c) => writeln!(out, "classes after SMOTE:  {}", fmt_counts(c))?,
            None => writeln!(out, "classes after SMOTE:  (SMOTE disabled)")?,
        }
        writeln!(out, "train rows:           {}", s.train_rows)?;
        writeln!(out, "test rows:            {}", s.test_rows)
    })()
    .map_err(out_err)?;
    Ok(s)
}

/// Feature/target Pearson correlations on the cleaned data.
pub fn correlations(cfg: &RunConfig, bars: bool, out: &mut dyn Write) -> Result<Vec<FeatureCorrelation>, CliError> {
    cfg.validate()?;
    let (loaded, _) = pipeline::load_clean(cfg)?;
    let rows = feature_target_correlation(&loaded.data).map_err(|e| CliError::data("correlation", e))?;
    report::ensure_dir(&cfg.output_dir)?;
    if cfg.wants(OutputFormat::Csv) {
        report::write_file(&cfg.output_dir.join("correlations.csv"), &report::correlations_csv(&rows))?;
    }
    if cfg.wants(OutputFormat::Json) {
        report::write_file(&cfg.output_dir.join("correlations.json"), &report::correlations_json(&rows))?;
    }
    let text = if bars {
        report::correlation_bars(&rows)
    } else {
        report::correlations_csv(&rows)
    };
    out.write_all(text.as_bytes()).map_err(out_err)?;
    Ok(rows)
}

fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.experiment_text().as_bytes()))
}

fn run_meta(cfg: &RunConfig, p: &Prepared) -> RunMeta {
    RunMeta {
        tool_version: env!("CARGO_PKG_VERSION"),
        dataset_fingerprint: p.fingerprint.clone(),
        config_sha256: config_hash(cfg),
        data_seed: cfg.data_seed,
        smote_seed: cfg.smote_seed,
        split_seed: cfg.split_seed,
        rf_seed: cfg.rf.seed,
        svm_seed: cfg.svm.seed,
        loaded_rows: p.loaded_rows,
        dropped_rows: p.dropped_rows,
        n_features: p.n_features,
        class_counts_before_smote: p.counts_before,
        class_counts_after_smote: p.counts_after,
        train_rows: p.train.n_rows(),
        test_rows: p.test.n_rows(),
        config: cfg.experiment_text(),
    }
}

fn save_model(cfg: &RunConfig, kind: ModelKind, fitted: &Fitted) -> Result<(), CliError> {
    let path = cfg.output_dir.join(format!("model_{}.json", kind.key()));
    let res = match fitted {
        Fitted::Baseline(m) => persist::save(&path, m),
        Fitted::Ensemble(m) => persist::save(&path, m),
    };
    res.map_err(|e| CliError::data(format!("saving {}", path.display()), e))
}

/// Fits and evaluates every configured model on one prepared split.
pub fn compare(cfg: &RunConfig, out: &mut dyn Write) -> Result<ComparisonReport, CliError> {
    let p = pipeline::prepare(cfg)?;
    report::ensure_dir(&cfg.output_dir)?;
    let mut entries = Vec::with_capacity(cfg.models.len());
    for &kind in &cfg.models {
        let start = Instant::now();
        let fitted = pipeline::fit(kind, cfg, &p.train)?;
        let eval = evaluate_model(fitted.classifier(), &p.test)
            .map_err(|e| CliError::training(format!("evaluating {}", kind.display_name()), e))?;
        let wall_time = start.elapsed();
        writeln!(
            out,
            "{:<24} accuracy {:.6}  f1 {:.6}  ({:.2}s)",
            kind.display_name(),
            eval.report.accuracy,
            eval.report.f1,
            wall_time.as_secs_f64()
        )
        .map_err(out_err)?;
        if cfg.output_save_model {
            save_model(cfg, kind, &fitted)?;
        }
        entries.push(ComparisonEntry {
            model: kind,
            report: eval.report,
            confusion: eval.confusion,
            wall_time,
        });
    }

    let dir = &cfg.output_dir;
    if cfg.wants(OutputFormat::Csv) {
        report::write_file(&dir.join("comparison.csv"), &report::comparison_csv(&entries))?;
    }
    if cfg.wants(OutputFormat::Json) {
        report::write_file(&dir.join("comparison.json"), &report::comparison_json(&entries))?;
    }
    let table = report::comparison_table(&entries);
    if cfg.wants(OutputFormat::Txt) {
        report::write_file(&dir.join("comparison.txt"), &table)?;
    }
    for e in &entries {
        report::write_file(
            &dir.join(format!("cm_{}.txt", e.model.key())),
            &report::confusion_text(e.model, &e.confusion),
        )?;
    }
    let meta = run_meta(cfg, &p);
    report::write_file(&dir.join("run_meta.json"), &report::meta_json(&meta)?)?;
    write!(out, "\n{table}").map_err(out_err)?;
    Ok(ComparisonReport { entries, meta })
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub report: EvalReport,
    pub confusion: ConfusionMatrix,
    pub model: WeightedEnsembleModel,
    pub test_rows: usize,
}

/// Trains only the weighted ensemble and writes its report and per-row diagnostics.
pub fn ensemble(cfg: &RunConfig, out: &mut dyn Write) -> Result<EnsembleRun, CliError> {
    let p = pipeline::prepare(cfg)?;
    report::ensure_dir(&cfg.output_dir)?;
    let Fitted::Ensemble(model) = pipeline::fit(ModelKind::Ensemble, cfg, &p.train)? else {
        unreachable!("ensemble kind always yields an ensemble");
    };
    let eval_err = |e| CliError::training("evaluating Weighted Ensemble", e);
    let preds = model.predict_batch(p.test.features()).map_err(eval_err)?;
    let scores = preds.iter().map(|r| r.proba).collect();
    let eval = evaluate_scores(scores, p.test.labels()).map_err(eval_err)?;

    let dir = &cfg.output_dir;
    if cfg.wants(OutputFormat::Csv) {
        let csv = format!("{CSV_HEADER}\n{}\n", eval.report.csv_row(&eval.confusion));
        report::write_file(&dir.join("ensemble_report.csv"), &csv)?;
    }
    if cfg.wants(OutputFormat::Json) {
        report::write_file(&dir.join("ensemble_report.json"), &(eval.report.to_json(&eval.confusion) + "\n"))?;
    }
    if cfg.wants(OutputFormat::Txt) {
        report::write_file(&dir.join("ensemble_report.txt"), &eval.report.to_text())?;
    }
    report::write_file(
        &dir.join("cm_ensemble.txt"),
        &report::confusion_text(ModelKind::Ensemble, &eval.confusion),
    )?;
    if cfg.output_per_row {
        report::write_file(
            &dir.join("ensemble_rows.csv"),
            &report::ensemble_rows_csv(&preds, p.test.labels()),
        )?;
    }
    if cfg.output_save_model {
        save_model(cfg, ModelKind::Ensemble, &Fitted::Ensemble(model.clone()))?;
    }
    write!(out, "{}\n{}", eval.report.to_text(), eval.confusion.render()).map_err(out_err)?;
    Ok(EnsembleRun {
        report: eval.report,
        confusion: eval.confusion,
        model,
        test_rows: p.test.n_rows(),
    })
}

/// Counts of the published reference confusion matrix.
pub const REFERENCE_MATRIX: ConfusionMatrix = ConfusionMatrix {
    tp: 8997,
    fp: 1,
    fn_: 2,
    tn: 8903,
};

/// Metrics for a hand-entered confusion matrix.
pub fn metrics(tp: i64, fp: i64, fn_: i64, tn: i64, json: bool, out: &mut dyn Write) -> Result<EvalReport, CliError> {
    let count = |name: &str, v: i64| {
        u64::try_from(v).map_err(|_| CliError::config(format!("--{name} must be a non-negative integer, got {v}")))
    };
    let cm = ConfusionMatrix::new(count("tp", tp)?, count("fp", fp)?, count("fn", fn_)?, count("tn", tn)?);
    let report = metrics_from_cm(&cm).map_err(|e| CliError::config(e.to_string()))?;
    let text = if json {
        report.to_json(&cm) + "\n"
    } else {
        let mut s = format!("{}\n{}", report.to_text(), cm.render());
        s.push_str("\nnote: precision, recall and kappa are derived from this matrix.\n");
        if cm == REFERENCE_MATRIX {
            s.push_str(
                "note: for this reference matrix the published summary lists precision 0.999789, \
                 recall 0.999889 and kappa 0.999495, which these counts do not produce; \
                 accuracy, F1 and MCC agree.\n",
            );
        }
        s
    };
    out.write_all(text.as_bytes()).map_err(out_err)?;
    Ok(report)
}
