use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reliance::eval::*;
use reliance::Error;

/// Independent recount: precision, recall, f1, accuracy, degenerate.
fn brute(pred: &[u8], truth: &[u8]) -> (f64, f64, f64, f64, bool) {
    let count = |p: u8, t: u8| pred.iter().zip(truth).filter(|&(&a, &b)| a == p && b == t).count() as f64;
    let (tp, fp, fn_, tn) = (count(1, 1), count(1, 0), count(0, 1), count(0, 0));
    let mut degenerate = false;
    let mut div = |a: f64, b: f64| {
        if b == 0.0 {
            degenerate = true;
            0.0
        } else {
            a / b
        }
    };
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fn_);
    let f = div(2.0 * p * r, p + r);
    let acc = (tp + tn) / pred.len() as f64;
    (p, r, f, acc, degenerate)
}

#[test]
fn metrics_match_brute_force_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let bias: f64 = rng.gen();
        let truth: Vec<u8> = (0..n).map(|_| rng.gen_bool(bias) as u8).collect();
        let pred: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
        let m = compute_metrics(&ConfusionMatrix::from_predictions(&pred, &truth).unwrap()).unwrap();
        let (p, r, f, a, d) = brute(&pred, &truth);
        assert!((m.precision - p).abs() <= 1e-12);
        assert!((m.recall - r).abs() <= 1e-12);
        assert!((m.f1 - f).abs() <= 1e-12);
        assert!((m.accuracy - a).abs() <= 1e-12);
        assert_eq!(m.degenerate, d);
    }
}

#[test]
fn metric_contract_cases() {
    let perfect = compute_metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 }).unwrap();
    assert_eq!((perfect.precision, perfect.recall, perfect.f1, perfect.accuracy), (1.0, 1.0, 1.0, 1.0));
    assert!(!perfect.degenerate);
    let none = compute_metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 3, tn: 2 }).unwrap();
    assert_eq!(none.precision, 0.0);
    assert!(none.degenerate);
    assert!(matches!(compute_metrics(&ConfusionMatrix::default()), Err(Error::EmptyEvaluation)));
    assert!(ConfusionMatrix::from_predictions(&[1], &[1, 0]).is_err());
}

#[test]
fn published_f1_is_consistent_with_precision_and_recall() {
    let rows = reference_results();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
        assert!((f1 - r.f1).abs() <= 0.6, "{}: {f1:.3} vs {}", r.model, r.f1);
    }
    let bilstm = reference_for("BiLSTM").unwrap();
    let f = f1_from(0.71, 0.77);
    assert!((f - 0.73878).abs() < 1e-5);
    assert_eq!((f * 100.0).round(), bilstm.f1);
}

#[test]
fn published_accuracy_column() {
    let acc: Vec<f64> = reference_results().iter().map(|r| r.accuracy).collect();
    assert_eq!(acc, vec![73.57, 87.58, 89.29, 80.54, 86.00, 92.43]);
}

#[test]
fn baseline_rows() {
    let t = baseline_table();
    assert_eq!(t.len(), 7);
    let singh = t.iter().find(|r| r.name == "Singh et al.").unwrap();
    assert_eq!((singh.precision, singh.recall, singh.f1, singh.accuracy), (Some(86.0), Some(90.0), Some(88.0), Some(87.0)));
    let ghanem = t.iter().find(|r| r.name == "Ghanem et al.").unwrap();
    assert_eq!((ghanem.precision, ghanem.recall, ghanem.f1, ghanem.accuracy), (None, None, Some(48.80), None));
    let yang = t.iter().find(|r| r.name == "Yang et al.").unwrap();
    assert_eq!(yang.accuracy, None);
    assert_eq!(t.iter().filter(|r| r.name == "Ahmed et al.").count(), 2);
    let last = t.last().unwrap();
    assert_eq!((last.precision, last.recall, last.f1, last.accuracy), (Some(92.49), Some(93.88), Some(92.75), Some(92.43)));
}

#[test]
fn split_sizes() {
    let labels: Vec<u8> = (0..20800).map(|i| (i % 2) as u8).collect();
    let (train, test) = split_train_test(&labels, &SplitSpec::default()).unwrap();
    assert_eq!((train.len(), test.len()), (16640, 4160));

    let ten: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
    let (train, _) = split_train_test(&ten, &SplitSpec::default()).unwrap();
    assert_eq!(train.iter().filter(|&&i| ten[i] == 1).count(), 4);
    assert_eq!(train.iter().filter(|&&i| ten[i] == 0).count(), 4);

    assert!(matches!(split_train_test(&[1, 1, 1], &SplitSpec::default()), Err(Error::SingleClass)));
}

#[test]
fn k_fold_cases() {
    let labels: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
    let folds = k_fold(&labels, 10, 1).unwrap();
    assert!(folds.iter().all(|(tr, va)| va.len() == 1 && tr.len() == 9));

    let labels: Vec<u8> = (0..101).map(|i| (i % 3 == 0) as u8).collect();
    let sizes: Vec<usize> = k_fold(&labels, 10, 1).unwrap().iter().map(|f| f.1.len()).collect();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);

    assert!(matches!(k_fold(&labels, 1, 0), Err(Error::FoldTooSmall { .. })));
    assert!(matches!(k_fold(&labels[..3], 4, 0), Err(Error::FoldTooSmall { .. })));
}

fn labels_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 4..200).prop_filter("both classes", |v| v.contains(&0) && v.contains(&1))
}

proptest! {
    #[test]
    fn split_is_a_deterministic_partition(labels in labels_strategy(), seed in any::<u64>()) {
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let (train, test) = split_train_test(&labels, &spec).unwrap();
        let n = labels.len();
        prop_assert_eq!(train.len(), (0.8 * n as f64).floor() as usize);
        let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(split_train_test(&labels, &spec).unwrap(), (train.clone(), test));

        let ones = labels.iter().filter(|&&l| l == 1).count();
        let min_class = ones.min(n - ones) as f64;
        let corpus_p = ones as f64 / n as f64;
        let train_p = train.iter().filter(|&&i| labels[i] == 1).count() as f64 / train.len() as f64;
        prop_assert!((train_p - corpus_p).abs() < 1.0 / min_class);
    }

    #[test]
    fn k_fold_partitions(labels in labels_strategy(), k in 2usize..11, seed in any::<u64>()) {
        prop_assume!(labels.len() >= k);
        let folds = k_fold(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; labels.len()];
        for (train, val) in &folds {
            prop_assert_eq!(train.len() + val.len(), labels.len());
            for &i in val {
                seen[i] += 1;
                prop_assert!(!train.contains(&i));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.1.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(k_fold(&labels, k, seed).unwrap(), folds);
    }

    #[test]
    fn constant_classifier_scores_the_class_rate(labels in labels_strategy(), guess in 0u8..2) {
        let pred = vec![guess; labels.len()];
        let m = compute_metrics(&ConfusionMatrix::from_predictions(&pred, &labels).unwrap()).unwrap();
        let rate = labels.iter().filter(|&&l| l == guess).count() as f64 / labels.len() as f64;
        prop_assert_eq!(m.accuracy, rate);
    }

    #[test]
    fn f1_is_bounded_by_the_harmonic_form(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
        prop_assume!(tp + fp + fn_ + tn > 0);
        let m = compute_metrics(&ConfusionMatrix { tp, fp, fn_, tn }).unwrap();
        let (lo, hi) = (m.precision.min(m.recall), m.precision.max(m.recall));
        if hi > 0.0 {
            prop_assert!(m.f1 <= 2.0 * lo / (1.0 + lo / hi) + 1e-12);
        }
        prop_assert!(m.f1 <= hi + 1e-12);
        let row = ModelRow::from_metrics("x", &m);
        prop_assert!((f1_from(row.precision, row.recall) - row.f1).abs() <= 0.6);
        for v in [row.precision, row.recall, row.f1, row.accuracy] {
            prop_assert!((0.0..=100.0).contains(&v));
        }
    }
}

#[test]
fn report_renders_and_round_trips() {
    let m = compute_metrics(&ConfusionMatrix { tp: 8, fp: 2, fn_: 1, tn: 9 }).unwrap();
    let report = MetricsReport {
        rows: vec![ModelRow::from_metrics("SVM", &m), ModelRow::from_metrics("Ensemble", &m)],
        meta: RunMetadata { profile: "desk".into(), seed: 1, created_at: "0".into(), ..RunMetadata::default() },
    };
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.next(), Some("SVM,80.00,88.89,84.21,85.00"));
    assert!(report.to_markdown().contains("89.29"));
    let back = MetricsReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);

    let dir = tempfile::tempdir().unwrap();
    report.write_all(dir.path()).unwrap();
    for f in ["report.csv", "report.md", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
