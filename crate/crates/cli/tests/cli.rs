use std::path::Path;
use std::process::{Command, Output};

use firealarm_cli::commands;
use firealarm_cli::config::RunConfig;

fn firealarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firealarm"))
        .args(args)
        .env_remove("FIREALARM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_synthetic(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.data_synthetic = true;
    cfg.data_n_per_class = 150;
    cfg.rf.n_trees = 20;
    cfg.gbt.n_rounds = 30;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn exit_codes_follow_failure_class() {
    assert_eq!(firealarm(&["metrics", "--tp", "1", "--fp", "0", "--fn", "0", "--tn", "1"]).status.code(), Some(0));
    assert_eq!(firealarm(&["metrics", "--tp", "-3", "--fp", "0", "--fn", "0", "--tn", "1"]).status.code(), Some(1));
    assert_eq!(firealarm(&["metrics", "--tp", "0", "--fp", "0", "--fn", "0", "--tn", "0"]).status.code(), Some(1));
    assert_eq!(firealarm(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(firealarm(&["inspect"]).status.code(), Some(1));
    assert_eq!(firealarm(&["inspect", "--synthetic", "--knn.k", "zero"]).status.code(), Some(1));
    let missing = firealarm(&["inspect", "--data.path", "/definitely/not/here.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("loading"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "Temperature[C],Fire Alarm\n1,0\n").unwrap();
    assert_eq!(firealarm(&["inspect", "--data.path", bad.to_str().unwrap()]).status.code(), Some(2));

    // a single row cannot be split
    let tiny = tempfile::tempdir().unwrap();
    let one = tiny.path().join("one.csv");
    let cfg = RunConfig::default();
    let header = cfg.schema_features.join(",") + ",Fire Alarm\n";
    let row = vec!["1"; cfg.schema_features.len()].join(",") + ",1\n";
    std::fs::write(&one, header + &row).unwrap();
    assert_eq!(firealarm(&["inspect", "--data.path", one.to_str().unwrap(), "--smote.enabled", "false"]).status.code(), Some(2));
}

#[test]
fn metrics_for_trivial_matrices() {
    let o = firealarm(&["metrics", "--tp", "1", "--tn", "1", "--fp", "0", "--fn", "0", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in ["accuracy", "precision", "recall", "f1", "kappa", "mcc"] {
        assert_eq!(v[k].as_f64(), Some(1.0), "{k}");
    }
    let o = firealarm(&["metrics", "--tp", "0", "--tn", "0", "--fp", "1", "--fn", "1", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["accuracy"].as_f64(), Some(0.0));
    assert_eq!(v["mcc"].as_f64(), Some(-1.0));
}

#[test]
fn inspect_reports_generator_counts() {
    let o = firealarm(&["inspect", "--synthetic", "--data.n_per_class", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("classes before SMOTE: No Alarm 100 / Fire Alarm 100"), "{text}");
    assert!(text.contains("test rows:            40"), "{text}");
}

#[test]
fn config_text_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let first = stdout(&firealarm(&["config", "--split.seed", "11", "--models", "knn,gbt"]));
    let path = dir.path().join("run.conf");
    std::fs::write(&path, &first).unwrap();
    let second = stdout(&firealarm(&["config", "--config", path.to_str().unwrap()]));
    assert_eq!(first, second);
    // the environment variable supplies the default path, and flags still win
    let via_env = Command::new(env!("CARGO_BIN_EXE_firealarm"))
        .args(["config", "--knn.k", "3"])
        .env("FIREALARM_CONFIG", &path)
        .output()
        .unwrap();
    let text = stdout(&via_env);
    assert!(text.contains("split.seed = 11\n") && text.contains("knn.k = 3\n"), "{text}");

    std::fs::write(&path, "knn.kk = 3\n").unwrap();
    assert_eq!(firealarm(&["config", "--config", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    commands::compare(&small_synthetic(a.path()), &mut out).unwrap();
    commands::compare(&small_synthetic(b.path()), &mut out).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 13);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn model_filter_limits_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = firealarm(&[
        "compare",
        "--synthetic",
        "--data.n_per_class",
        "100",
        "--models",
        "knn,gbt,ensemble",
        "--output.dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("knn,") && rows[1].starts_with("gbt,") && rows[2].starts_with("ensemble,"));
    assert!(!dir.path().join("cm_lr.txt").exists());
}

#[test]
fn confusion_totals_equal_the_test_partition() {
    let dir = tempfile::tempdir().unwrap();
    let report = commands::compare(&small_synthetic(dir.path()), &mut Vec::new()).unwrap();
    assert_eq!(report.entries.len(), 9);
    for e in &report.entries {
        assert_eq!(e.confusion.total() as usize, report.meta.test_rows);
    }
    assert_eq!(report.meta.test_rows, 60);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 9);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["dataset_fingerprint"].as_str().unwrap().len(), 64);
}

#[test]
fn correlations_cover_every_feature_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_synthetic(dir.path());
    let rows = commands::correlations(&cfg, true, &mut Vec::new()).unwrap();
    assert_eq!(rows.len(), cfg.schema_features.len());
    assert!(rows.iter().all(|c| (-1.0..=1.0).contains(&c.r)));
    assert!(rows.windows(2).all(|w| w[0].r.abs() >= w[1].r.abs()));
    let csv = std::fs::read_to_string(dir.path().join("correlations.csv")).unwrap();
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

#[test]
fn feature_equal_to_label_tops_the_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let mut text = String::from("a,b,leak,Fire Alarm\n");
    for i in 0..40u32 {
        let y = u32::from(i % 3 == 0);
        text.push_str(&format!("{},{},{y},{y}\n", (i * 7) % 11, (i * 5) % 13));
    }
    std::fs::write(&path, text).unwrap();
    let mut cfg = RunConfig::default();
    cfg.data_path = Some(path);
    cfg.schema_features = vec!["a".into(), "b".into(), "leak".into()];
    cfg.output_dir = dir.path().join("out");
    let rows = commands::correlations(&cfg, false, &mut Vec::new()).unwrap();
    assert_eq!(rows[0].feature, "leak");
    assert!((rows[0].r - 1.0).abs() < 1e-12);
}

#[test]
fn ensemble_rows_match_the_test_partition() {
    let dir = tempfile::tempdir().unwrap();
    let run = commands::ensemble(&small_synthetic(dir.path()), &mut Vec::new()).unwrap();
    let rows = std::fs::read_to_string(dir.path().join("ensemble_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), run.test_rows + 1);
    assert_eq!(run.confusion.total() as usize, run.test_rows);
    assert!(dir.path().join("cm_ensemble.txt").exists());
}

#[test]
fn knn_only_weights_reproduce_the_knn_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small_synthetic(a.path());
    cfg.data_separation = 0.6;
    cfg.density_alpha_high = 1.0;
    cfg.density_alpha_low = 1.0;
    let ens = commands::ensemble(&cfg, &mut Vec::new()).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    cfg.models = vec![firealarm_cli::ModelKind::Knn];
    let knn = commands::compare(&cfg, &mut Vec::new()).unwrap();
    assert_eq!(knn.entries[0].report, ens.report);
    assert_eq!(knn.entries[0].confusion, ens.confusion);
}

#[test]
fn saved_models_reload() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_synthetic(dir.path());
    cfg.output_save_model = true;
    cfg.models = vec![firealarm_cli::ModelKind::Dt, firealarm_cli::ModelKind::Ensemble];
    commands::compare(&cfg, &mut Vec::new()).unwrap();
    let _: firealarm_core::Model = firealarm_core::persist::load(dir.path().join("model_dt.json")).unwrap();
    let _: firealarm_core::WeightedEnsembleModel =
        firealarm_core::persist::load(dir.path().join("model_ensemble.json")).unwrap();
}
