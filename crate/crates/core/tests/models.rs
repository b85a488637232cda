use firealarm_core::classifiers::{
    fit_adaboost, fit_cart, fit_gaussian_nb, fit_gbt, fit_knn, fit_linear_svm, fit_logistic, fit_random_forest,
    AdaBoostConfig, CartConfig, GbtConfig, KnnConfig, LinearSvmConfig, LogisticConfig, NaiveBayesConfig,
    RandomForestConfig,
};
use firealarm_core::dataset::{fit_normalizer, generate_synthetic, train_test_split, NormalizationMethod};
use firealarm_core::evaluation::evaluate_model;
use firealarm_core::persist;
use firealarm_core::{ensemble_fit, Dataset, EnsembleConfig, Model, ProbabilisticClassifier, WeightedEnsembleModel};

/// Min-max scaled synthetic data, split 75/25.
fn split(n_per_class: usize, separation: f64, seed: u64) -> (Dataset, Dataset) {
    let raw = generate_synthetic(n_per_class, separation, seed).unwrap();
    let d = fit_normalizer(&raw, NormalizationMethod::MinMax).unwrap().apply(&raw).unwrap();
    let s = train_test_split(&d, 0.25, seed, false).unwrap();
    (d.subset(&s.train), d.subset(&s.test))
}

fn small_forest() -> RandomForestConfig {
    RandomForestConfig {
        n_trees: 15,
        ..RandomForestConfig::default()
    }
}

fn all_baselines(train: &Dataset) -> Vec<(&'static str, Model)> {
    vec![
        ("lr", fit_logistic(train, &LogisticConfig::default()).unwrap().into()),
        ("dt", fit_cart(train, &CartConfig::default()).unwrap().into()),
        ("rf", fit_random_forest(train, &small_forest()).unwrap().into()),
        ("nb", fit_gaussian_nb(train, &NaiveBayesConfig::default()).unwrap().into()),
        ("knn", fit_knn(train, &KnnConfig::default()).unwrap().into()),
        ("svm", fit_linear_svm(train, &LinearSvmConfig::default()).unwrap().into()),
        ("gbt", fit_gbt(train, &GbtConfig::default()).unwrap().into()),
        ("adaboost", fit_adaboost(train, &AdaBoostConfig::default()).unwrap().into()),
    ]
}

#[test]
fn every_probability_is_in_the_unit_interval() {
    let (train, test) = split(120, 0.8, 5);
    for (name, m) in all_baselines(&train) {
        for r in test.features().rows() {
            let p = m.predict_proba(r).unwrap();
            assert!((0.0..=1.0).contains(&p), "{name}: {p}");
            assert_eq!(m.predict_label(r).unwrap(), u8::from(p >= 0.5), "{name}");
        }
    }
}

#[test]
fn every_model_learns_separable_data() {
    let (train, test) = split(200, 3.0, 11);
    for (name, m) in all_baselines(&train) {
        let acc = evaluate_model(&m, &test).unwrap().report.accuracy;
        assert!(acc >= 0.95, "{name}: accuracy {acc}");
    }
}

#[test]
fn unbounded_tree_fits_distinct_training_rows() {
    let (train, _) = split(150, 0.3, 2);
    let m = fit_cart(&train, &CartConfig::default()).unwrap();
    for (r, &l) in train.features().rows().zip(train.labels()) {
        assert_eq!(m.predict_label(r).unwrap(), l);
    }
}

#[test]
fn json_round_trip_preserves_predictions() {
    let (train, test) = split(80, 1.0, 9);
    for (name, m) in all_baselines(&train) {
        let text = persist::to_json(&m).unwrap();
        let back: Model = persist::from_json(&text).unwrap();
        for r in test.features().rows() {
            assert_eq!(back.proba(r).to_bits(), m.proba(r).to_bits(), "{name}");
        }
    }
    let ens = ensemble_fit(&train, &EnsembleConfig::default()).unwrap();
    let back: WeightedEnsembleModel = persist::from_json(&persist::to_json(&ens).unwrap()).unwrap();
    assert_eq!(back, ens);
}

#[test]
fn persisted_kind_is_checked() {
    let (train, _) = split(40, 1.0, 1);
    let ens = ensemble_fit(&train, &EnsembleConfig::default()).unwrap();
    let text = persist::to_json(&ens).unwrap();
    assert!(persist::from_json::<Model>(&text).is_err());
}

#[test]
fn ensemble_probability_lies_between_its_components() {
    let (train, test) = split(150, 0.7, 21);
    let ens = ensemble_fit(&train, &EnsembleConfig::default()).unwrap();
    for p in ens.predict_batch(test.features()).unwrap() {
        assert!(p.proba >= p.p_knn.min(p.p_gbt) && p.proba <= p.p_knn.max(p.p_gbt));
        assert!((p.w_knn + p.w_gbt - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fitting_is_deterministic() {
    let (train, test) = split(100, 0.8, 4);
    let a = all_baselines(&train);
    let b = all_baselines(&train);
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        assert_eq!(x, y, "{name}");
    }
    let e1 = ensemble_fit(&train, &EnsembleConfig::default()).unwrap();
    let e2 = ensemble_fit(&train, &EnsembleConfig::default()).unwrap();
    assert_eq!(e1.predict_batch(test.features()).unwrap(), e2.predict_batch(test.features()).unwrap());
}
