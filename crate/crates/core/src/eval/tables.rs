//! Published reference numbers used as comparison columns.

use serde::Serialize;

/// A published row; absent cells were not reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineRow {
    pub name: &'static str,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

const fn row(name: &'static str, p: Option<f64>, r: Option<f64>, f: Option<f64>, a: Option<f64>) -> BaselineRow {
    BaselineRow { name, precision: p, recall: r, f1: f, accuracy: a }
}

/// Prior systems evaluated on the Fake News corpus, followed by the
/// published ensemble row. The duplicated "Ahmed et al." entry is kept as
/// published.
pub fn baseline_table() -> Vec<BaselineRow> {
    vec![
        row("Ghanem et al.", None, None, Some(48.80), None),
        row("Singh et al.", Some(86.00), Some(90.00), Some(88.00), Some(87.00)),
        row("Ahmed et al.", None, None, None, Some(89.00)),
        row("Ruchansky et al.", None, None, Some(89.40), Some(89.20)),
        row("Ahmed et al.", None, None, None, Some(92.00)),
        row("Yang et al.", Some(92.20), Some(92.77), Some(92.10), None),
        row("RELIANCE", Some(92.49), Some(93.88), Some(92.75), Some(92.43)),
    ]
}

/// Published per-model results, in percent, keyed by the report row name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub model: &'static str,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

pub fn reference_results() -> Vec<ReferenceRow> {
    let r = |model, precision, recall, f1, accuracy| ReferenceRow { model, precision, recall, f1, accuracy };
    vec![
        r("BiLSTM", 71.0, 77.0, 74.0, 73.57),
        r("LR", 87.0, 89.0, 88.0, 87.58),
        r("SVM", 91.0, 88.0, 89.0, 89.29),
        r("Random Forest", 77.0, 85.0, 81.0, 80.54),
        r("Naive Bayes", 82.0, 93.0, 87.0, 86.00),
        r("Ensemble", 92.0, 94.0, 93.0, 92.43),
    ]
}

pub fn reference_for(model: &str) -> Option<ReferenceRow> {
    reference_results().into_iter().find(|r| r.model == model)
}
