//! Splits, metrics, reports and the end-to-end experiment runner.

pub mod experiment;
pub mod metrics;
pub mod report;
pub mod split;
pub mod tables;

pub use experiment::{load_corpus, run_experiment, split_corpus, train_pipeline, Experiment, Pipeline};
pub use metrics::{compute_metrics, f1_from, ConfusionMatrix, Metrics};
pub use report::{MetricsReport, ModelRow, RunMetadata, CSV_HEADER};
pub use split::{k_fold, split_train_test, SplitSpec};
pub use tables::{baseline_table, reference_for, reference_results, BaselineRow, ReferenceRow};
