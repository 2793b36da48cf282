//! Result tables: one row per model, rendered as CSV, Markdown or JSON.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::Metrics;
use super::tables::reference_for;

pub const CSV_HEADER: &str = "model,precision,recall,f1,accuracy";

/// Percentages in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    #[serde(default)]
    pub degenerate: bool,
}

impl ModelRow {
    pub fn from_metrics(model: impl Into<String>, m: &Metrics) -> Self {
        Self {
            model: model.into(),
            precision: 100.0 * m.precision,
            recall: 100.0 * m.recall,
            f1: 100.0 * m.f1,
            accuracy: 100.0 * m.accuracy,
            degenerate: m.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub profile: String,
    pub seed: u64,
    pub split_seed: u64,
    pub config_digest: String,
    pub n_train: usize,
    pub n_test: usize,
    pub transductive: bool,
    /// Excluded from determinism comparisons.
    pub created_at: String,
    #[serde(default)]
    pub stage_seconds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<ModelRow>,
    pub meta: RunMetadata,
}

impl MetricsReport {
    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.2},{:.2},{:.2},{:.2}", r.model, r.precision, r.recall, r.f1, r.accuracy);
        }
        s
    }

    /// Markdown table with the published accuracy as a comparison column.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Model | Precision | Recall | F1 | Accuracy | Published accuracy |\n");
        s.push_str("|---|---:|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let published = reference_for(&r.model).map(|p| format!("{:.2}", p.accuracy)).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "| {} | {:.2} | {:.2} | {:.2} | {:.2} | {} |",
                r.model, r.precision, r.recall, r.f1, r.accuracy, published
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON without wall-clock fields, for determinism checks.
    pub fn body_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.meta.created_at.clear();
        copy.meta.stage_seconds.clear();
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `report.csv`, `report.md` and `report.json` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [("report.csv", self.to_csv()), ("report.md", self.to_markdown()), ("report.json", self.to_json()?)] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_round_trip() {
        let r = MetricsReport {
            rows: vec![ModelRow { model: "LR".into(), precision: 50.0, recall: 100.0, f1: 66.666, accuracy: 75.0, degenerate: false }],
            meta: RunMetadata { created_at: "now".into(), ..Default::default() },
        };
        assert_eq!(r.to_csv(), "model,precision,recall,f1,accuracy\nLR,50.00,100.00,66.67,75.00\n");
        assert!(r.to_markdown().contains("| LR | 50.00 | 100.00 | 66.67 | 75.00 | 87.58 |"));
        assert_eq!(MetricsReport::from_json(&r.to_json().unwrap()).unwrap(), r);
        assert!(!r.body_json().unwrap().contains("now"));
    }
}
