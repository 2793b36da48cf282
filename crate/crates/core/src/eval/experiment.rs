//! End-to-end runs: load, preprocess, split, embed, stack, score.

use std::time::Instant;

use crate::config::{DatasetSource, RunConfig};
use crate::corpus::{load_dataset, preprocess_all, read_cache, Document, StopwordList};
use crate::embed::{train_doc2vec, Doc2VecModel};
use crate::ensemble::{train_stack, Prediction, StackingModel};
use crate::error::{Error, Result, StageExt};
use crate::models::{BaseModelKind, Features, TrainingSet};
use crate::nncore::Matrix;

use super::metrics::{compute_metrics, ConfusionMatrix};
use super::report::{MetricsReport, ModelRow, RunMetadata};
use super::split::{split_train_test, SplitSpec};

/// Trained Doc2Vec model plus stack: everything needed to score a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub doc2vec: Doc2VecModel<f64>,
    pub stack: StackingModel<f64>,
    /// Base seed for vector inference; each document adds its id.
    pub infer_seed: u64,
}

impl Pipeline {
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        self.doc2vec.vocab.encode(tokens)
    }

    pub fn infer(&self, doc: &Document) -> Result<Vec<f64>> {
        infer_for(&self.doc2vec, doc, self.infer_seed)
    }

    pub fn predict_with_vector(&self, doc: &Document, vector: &[f64]) -> Result<Prediction<f64>> {
        let tokens = self.encode(&doc.tokens);
        let f = Features { vector, tokens: &tokens, word_vectors: &self.doc2vec.word_vectors };
        self.stack.predict(&f)
    }

    /// Features always come from inference, for training and unseen
    /// documents alike, so both share one distribution.
    pub fn predict(&self, doc: &Document) -> Result<Prediction<f64>> {
        self.predict_with_vector(doc, &self.infer(doc)?)
    }
}

fn stratified_subset(docs: Vec<Document>, fraction: f64, seed: u64) -> Result<Vec<Document>> {
    if fraction >= 1.0 {
        return Ok(docs);
    }
    let labels = labels_of(&docs)?;
    let (keep, _) = split_train_test(&labels, &SplitSpec { train_fraction: fraction, seed, stratified: true })?;
    let mut docs: Vec<Option<Document>> = docs.into_iter().map(Some).collect();
    Ok(keep.into_iter().filter_map(|i| docs[i].take()).collect())
}

pub fn labels_of(docs: &[Document]) -> Result<Vec<u8>> {
    docs.iter()
        .map(|d| d.label.ok_or_else(|| Error::BadLabel { id: d.id.to_string(), value: String::new() }))
        .collect()
}

/// Preprocessed, labelled corpus for a run (after optional subsampling).
pub fn load_corpus(config: &RunConfig) -> Result<Vec<Document>> {
    let docs = match &config.dataset {
        DatasetSource::Csv { path } => {
            let records = load_dataset(path, true).stage("load")?;
            let (docs, dropped) = preprocess_all(&records, &StopwordList::english());
            if !dropped.is_empty() {
                log::info!("dropped {} records without text", dropped.len());
            }
            docs
        }
        DatasetSource::Cache { path } => read_cache(path).stage("load")?,
        DatasetSource::Synthetic { spec } => return Ok(spec.generate()),
    };
    match config.subsample {
        Some(f) => stratified_subset(docs, f, config.seed).stage("subsample"),
        None => Ok(docs),
    }
}

/// Train and test halves of `docs` under the run's split.
pub fn split_corpus(docs: &[Document], config: &RunConfig) -> Result<(Vec<Document>, Vec<Document>)> {
    let labels = labels_of(docs).stage("split")?;
    let (tr, te) = split_train_test(&labels, &config.split).stage("split")?;
    Ok((tr.iter().map(|&i| docs[i].clone()).collect(), te.iter().map(|&i| docs[i].clone()).collect()))
}

#[derive(Debug, Default, Clone)]
pub struct StageTimer {
    pub stages: Vec<(String, f64)>,
}

impl StageTimer {
    pub fn time<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        log::info!("stage {name}: {secs:.2}s");
        self.stages.push((name.to_string(), secs));
        out
    }
}

/// Doc2Vec on `train` (plus `unlabelled` when transductive), then the stack.
pub fn train_pipeline(config: &RunConfig, train: &[Document], unlabelled: &[Document], timer: &mut StageTimer) -> Result<Pipeline> {
    let mut embed_docs = train.to_vec();
    if config.transductive {
        embed_docs.extend(unlabelled.iter().map(|d| Document { label: None, ..d.clone() }));
    }
    let doc2vec: Doc2VecModel<f64> = timer.time("embed", || train_doc2vec(&embed_docs, &config.doc2vec)).stage("embed")?;
    let infer_seed = config.seed;
    let rows = timer
        .time("infer", || train.iter().map(|d| infer_for(&doc2vec, d, infer_seed)).collect::<Result<Vec<_>>>())
        .stage("infer")?;
    let vectors = Matrix::from_rows(&rows).stage("infer")?;
    let tokens: Vec<Vec<usize>> = train.iter().map(|d| doc2vec.vocab.encode(&d.tokens)).collect();
    let labels = labels_of(train).stage("train")?;
    let set = TrainingSet::new(&vectors, &tokens, &doc2vec.word_vectors, &labels).stage("train")?;
    let fit = timer
        .time("train", || train_stack(&set, &config.models, &config.stack, config.seed, config.threads))
        .stage("train")?;
    Ok(Pipeline { doc2vec, stack: fit.model, infer_seed })
}

fn infer_for(model: &Doc2VecModel<f64>, doc: &Document, seed: u64) -> Result<Vec<f64>> {
    model.infer_vector(&doc.tokens, model.config.infer_steps, seed.wrapping_add(doc.id as u64))
}

/// Base and ensemble predictions for every test document.
pub struct Scored {
    pub predictions: Vec<Prediction<f64>>,
    pub labels: Vec<u8>,
}

pub fn score_documents(pipeline: &Pipeline, docs: &[Document]) -> Result<Scored> {
    let labels = labels_of(docs).stage("score")?;
    let predictions = docs.iter().map(|d| pipeline.predict(d)).collect::<Result<Vec<_>>>().stage("score")?;
    Ok(Scored { predictions, labels })
}

pub fn report_rows(scored: &Scored) -> Result<Vec<ModelRow>> {
    let mut rows = Vec::new();
    for kind in BaseModelKind::ALL {
        let pred: Vec<u8> = scored.predictions.iter().map(|p| crate::ensemble::decide(p.base_scores[kind.column()])).collect();
        let m = compute_metrics(&ConfusionMatrix::from_predictions(&pred, &scored.labels)?)?;
        rows.push(ModelRow::from_metrics(kind.display_name(), &m));
    }
    let pred: Vec<u8> = scored.predictions.iter().map(|p| p.label).collect();
    let m = compute_metrics(&ConfusionMatrix::from_predictions(&pred, &scored.labels)?)?;
    rows.push(ModelRow::from_metrics("Ensemble", &m));
    Ok(rows)
}

pub fn evaluate_pipeline(pipeline: &Pipeline, config: &RunConfig, test: &[Document], n_train: usize) -> Result<MetricsReport> {
    let scored = score_documents(pipeline, test)?;
    let rows = report_rows(&scored).stage("evaluate")?;
    Ok(MetricsReport { rows, meta: metadata(config, n_train, test.len())? })
}

pub fn metadata(config: &RunConfig, n_train: usize, n_test: usize) -> Result<RunMetadata> {
    Ok(RunMetadata {
        profile: format!("{:?}", config.profile).to_lowercase(),
        seed: config.seed,
        split_seed: config.split.seed,
        config_digest: config.digest()?,
        n_train,
        n_test,
        transductive: config.transductive,
        created_at: timestamp(),
        stage_seconds: Vec::new(),
    })
}

/// Seconds since the Unix epoch, as text.
pub fn timestamp() -> String {
    let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    secs.to_string()
}

pub struct Experiment {
    pub report: MetricsReport,
    pub pipeline: Pipeline,
    pub test: Vec<Document>,
}

pub fn run_experiment(config: &RunConfig) -> Result<Experiment> {
    config.validate()?;
    let mut timer = StageTimer::default();
    let docs = timer.time("load", || load_corpus(config))?;
    let (train, test) = split_corpus(&docs, config)?;
    let pipeline = train_pipeline(config, &train, &test, &mut timer)?;
    let mut report = timer.time("evaluate", || evaluate_pipeline(&pipeline, config, &test, train.len()))?;
    report.meta.stage_seconds = timer.stages;
    Ok(Experiment { report, pipeline, test })
}
