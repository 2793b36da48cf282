//! Paragraph vectors in the distributed-memory form (PV-DM) trained with
//! negative sampling.
//!
//! For every position the hidden vector is the mean of the document vector
//! and the input vectors of the surrounding context words. Each output row
//! `u` of the target word is pushed toward `h` and the sampled noise rows
//! away from it, ascending `ln σ(u_t·h) + Σ ln σ(-u_n·h)`. The learning rate
//! decays linearly from `initial_lr` to `min_lr` over all updates.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::{axpy, dot, log_sigmoid, sigmoid, Real};

use super::vocab::{build_vocab, NegativeSampler, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Doc2VecMode {
    /// Mean-combined distributed memory.
    PvDm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Doc2VecConfig {
    pub dim: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub window: usize,
    pub negative: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub mode: Doc2VecMode,
    pub seed: u64,
    /// Passes over a new document in [`Doc2VecModel::infer_vector`].
    pub infer_steps: usize,
}

impl Default for Doc2VecConfig {
    fn default() -> Self {
        Self {
            dim: 1200,
            min_count: 1,
            epochs: 50,
            window: 5,
            negative: 5,
            initial_lr: 0.025,
            min_lr: 1e-4,
            mode: Doc2VecMode::PvDm,
            seed: 42,
            infer_steps: 50,
        }
    }
}

impl Doc2VecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negative == 0 {
            return Err(Error::InvalidArgument("doc2vec dim, window and negative must be positive".into()));
        }
        if !(self.initial_lr > 0.0 && self.min_lr >= 0.0 && self.min_lr <= self.initial_lr) {
            return Err(Error::InvalidArgument("doc2vec learning rates must satisfy 0 <= min_lr <= initial_lr".into()));
        }
        Ok(())
    }
}

/// A trained document embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector<T> {
    pub id: i64,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Doc2VecModel<T> {
    /// Input word vectors, `V x dim`.
    pub word_vectors: Matrix<T>,
    /// Document vectors, `N x dim`, row order = training corpus order.
    pub doc_vectors: Matrix<T>,
    /// Output word vectors, `V x dim`.
    pub output_vectors: Matrix<T>,
    pub vocab: Vocabulary,
    pub config: Doc2VecConfig,
    pub doc_ids: Vec<i64>,
    doc_index: HashMap<i64, usize>,
    sampler: NegativeSampler,
}

/// Objective of one positive/negative group and the coefficients
/// `g_k = label_k - σ(u_k·h)`; the gradient is `Σ g_k u_k` for `h` and
/// `g_k h` for each `u_k`.
pub fn ns_coefficients<T: Real>(h: &[T], positive: &[T], negatives: &[&[T]]) -> (T, Vec<T>) {
    let mut coeffs = Vec::with_capacity(1 + negatives.len());
    let f = dot(positive, h);
    let mut obj = log_sigmoid(f);
    coeffs.push(T::one() - sigmoid(f));
    for u in negatives {
        let f = dot(u, h);
        obj += log_sigmoid(-f);
        coeffs.push(-sigmoid(f));
    }
    (obj, coeffs)
}

/// Gradients of the negative-sampling objective with respect to `h`, the
/// positive output row and each negative output row.
pub fn ns_gradients<T: Real>(h: &[T], positive: &[T], negatives: &[&[T]]) -> (T, Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let (obj, g) = ns_coefficients(h, positive, negatives);
    let mut dh = vec![T::zero(); h.len()];
    axpy(g[0], positive, &mut dh);
    for (k, u) in negatives.iter().enumerate() {
        axpy(g[k + 1], u, &mut dh);
    }
    let scaled = |c: T| h.iter().map(|&v| c * v).collect::<Vec<T>>();
    let du_neg = (0..negatives.len()).map(|k| scaled(g[k + 1])).collect();
    (obj, dh, scaled(g[0]), du_neg)
}

struct Trainer<'a, T> {
    window: usize,
    negative: usize,
    sampler: &'a NegativeSampler,
    h: Vec<T>,
    neu1e: Vec<T>,
    negs: Vec<usize>,
}

impl<'a, T: Real> Trainer<'a, T> {
    fn new(dim: usize, config: &Doc2VecConfig, sampler: &'a NegativeSampler) -> Self {
        Self {
            window: config.window,
            negative: config.negative,
            sampler,
            h: vec![T::zero(); dim],
            neu1e: vec![T::zero(); dim],
            negs: Vec::with_capacity(config.negative),
        }
    }

    /// Fill `h` with the mean of the document vector and the context word
    /// vectors. Returns the context bounds and `1/(1+|context|)`.
    fn hidden(&mut self, ids: &[usize], pos: usize, doc: &[T], words: &Matrix<T>) -> (usize, usize, T) {
        let lo = pos.saturating_sub(self.window);
        let hi = (pos + self.window + 1).min(ids.len());
        let inv = T::one() / T::from_usize_lossy(hi - lo);
        self.h.copy_from_slice(doc);
        for c in (lo..hi).filter(|&c| c != pos) {
            axpy(T::one(), words.row(ids[c]), &mut self.h);
        }
        self.h.iter_mut().for_each(|v| *v *= inv);
        (lo, hi, inv)
    }

    fn draw_negatives<R: Rng>(&mut self, target: usize, rng: &mut R) {
        self.negs.clear();
        for _ in 0..self.negative {
            let n = self.sampler.sample(rng);
            if n != target {
                self.negs.push(n);
            }
        }
    }

    /// Error signal for `h` (scaled by `lr`) into `neu1e`; optionally
    /// updates the output rows. Returns the objective before the update.
    fn output_pass(&mut self, target: usize, output: &mut Matrix<T>, update_output: bool, lr: T) -> T {
        let (obj, coeffs) = {
            let neg_rows: Vec<&[T]> = self.negs.iter().map(|&n| output.row(n)).collect();
            ns_coefficients(&self.h, output.row(target), &neg_rows)
        };
        self.neu1e.iter_mut().for_each(|v| *v = T::zero());
        for (k, word) in std::iter::once(target).chain(self.negs.iter().copied()).enumerate() {
            let g = coeffs[k] * lr;
            axpy(g, output.row(word), &mut self.neu1e);
            if update_output {
                axpy(g, &self.h, output.row_mut(word));
            }
        }
        obj
    }

    /// Joint update of document, context word and output vectors.
    #[allow(clippy::too_many_arguments)]
    fn train_step<R: Rng>(
        &mut self,
        ids: &[usize],
        pos: usize,
        doc: &mut [T],
        words: &mut Matrix<T>,
        output: &mut Matrix<T>,
        lr: T,
        rng: &mut R,
    ) -> T {
        let (lo, hi, inv) = self.hidden(ids, pos, doc, words);
        self.draw_negatives(ids[pos], rng);
        let obj = self.output_pass(ids[pos], output, true, lr);
        // h is a mean, so each input receives 1/count of the error.
        self.neu1e.iter_mut().for_each(|v| *v *= inv);
        axpy(T::one(), &self.neu1e, doc);
        for c in (lo..hi).filter(|&c| c != pos) {
            axpy(T::one(), &self.neu1e, words.row_mut(ids[c]));
        }
        obj
    }

    /// Update of the document vector only. With word and output vectors
    /// frozen the document vector takes the full error of `h`, i.e. a step
    /// `1+|context|` times the exact gradient step.
    fn infer_step<R: Rng>(&mut self, ids: &[usize], pos: usize, doc: &mut [T], words: &Matrix<T>, output: &Matrix<T>, lr: T, rng: &mut R) {
        self.hidden(ids, pos, doc, words);
        self.draw_negatives(ids[pos], rng);
        let neg_rows: Vec<&[T]> = self.negs.iter().map(|&n| output.row(n)).collect();
        let (_, coeffs) = ns_coefficients(&self.h, output.row(ids[pos]), &neg_rows);
        for (k, word) in std::iter::once(ids[pos]).chain(self.negs.iter().copied()).enumerate() {
            axpy(coeffs[k] * lr, output.row(word), doc);
        }
    }
}

fn init_vector<T: Real, R: Rng>(dim: usize, rng: &mut R) -> Vec<T> {
    let limit = 0.5 / dim as f64;
    (0..dim).map(|_| T::lit(rng.gen_range(-limit..=limit))).collect()
}

/// Per-epoch mean objective recorded during training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub epoch_objective: Vec<f64>,
}

impl<T: Real> Doc2VecModel<T> {
    /// Untrained model: `D` and `W` uniform in `±0.5/dim`, `O` zero.
    pub fn initialize(corpus: &[Document], config: &Doc2VecConfig) -> Result<Self> {
        config.validate()?;
        let vocab = build_vocab(corpus, config.min_count)?;
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut doc_index = HashMap::with_capacity(corpus.len());
        for (i, d) in corpus.iter().enumerate() {
            if doc_index.insert(d.id, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate document id {}", d.id)));
            }
        }
        let dim = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let limit = 0.5 / dim as f64;
        let doc_vectors = Matrix::uniform(corpus.len(), dim, limit, &mut rng);
        let word_vectors = Matrix::uniform(vocab.len(), dim, limit, &mut rng);
        let output_vectors = Matrix::zeros(vocab.len(), dim);
        let sampler = NegativeSampler::new(vocab.counts());
        Ok(Self {
            word_vectors,
            doc_vectors,
            output_vectors,
            vocab,
            config: config.clone(),
            doc_ids: corpus.iter().map(|d| d.id).collect(),
            doc_index,
            sampler,
        })
    }

    /// Reassemble a model from stored parts (used by persistence).
    pub fn from_parts(
        vocab: Vocabulary,
        config: Doc2VecConfig,
        doc_ids: Vec<i64>,
        word_vectors: Matrix<T>,
        doc_vectors: Matrix<T>,
        output_vectors: Matrix<T>,
    ) -> Result<Self> {
        let (v, dim) = (vocab.len(), config.dim);
        if word_vectors.shape() != (v, dim) || output_vectors.shape() != (v, dim) || doc_vectors.shape() != (doc_ids.len(), dim) {
            return Err(Error::shape(format!("V={v}, N={}, dim={dim}", doc_ids.len()), "stored matrices"));
        }
        let doc_index = doc_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let sampler = NegativeSampler::new(vocab.counts());
        Ok(Self { word_vectors, doc_vectors, output_vectors, vocab, config, doc_ids, doc_index, sampler })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn sampler(&self) -> &NegativeSampler {
        &self.sampler
    }

    pub fn doc_row(&self, id: i64) -> Option<usize> {
        self.doc_index.get(&id).copied()
    }

    pub fn doc_vector(&self, id: i64) -> Result<DocVector<T>> {
        let row = self.doc_row(id).ok_or(Error::UnknownDocument(id))?;
        Ok(DocVector { id, values: self.doc_vectors.row(row).to_vec() })
    }

    fn check_finite(&self) -> Result<()> {
        if self.word_vectors.is_finite() && self.doc_vectors.is_finite() && self.output_vectors.is_finite() {
            Ok(())
        } else {
            Err(Error::NumericOverflow("doc2vec training"))
        }
    }

    /// Run `config.epochs` passes over `corpus`, which must be the corpus the
    /// model was initialized with.
    pub fn train(&mut self, corpus: &[Document]) -> Result<TrainingTrace> {
        if corpus.len() != self.doc_ids.len() {
            return Err(Error::shape(self.doc_ids.len(), corpus.len()));
        }
        let encoded: Vec<Vec<usize>> = corpus.iter().map(|d| self.vocab.encode(&d.tokens)).collect();
        let positions: usize = encoded.iter().map(Vec::len).sum();
        let epochs = self.config.epochs;
        let total_updates = (positions * epochs).max(1) as f64;
        let (lr0, lr_min) = (self.config.initial_lr, self.config.min_lr);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let sampler = self.sampler.clone();
        let mut trainer = Trainer::new(self.dim(), &self.config, &sampler);
        let mut trace = TrainingTrace::default();
        let mut done = 0usize;
        for _ in 0..epochs {
            let mut obj_sum = 0.0;
            for (row, ids) in encoded.iter().enumerate() {
                for pos in 0..ids.len() {
                    let lr = T::lit((lr0 - (lr0 - lr_min) * done as f64 / total_updates).max(lr_min));
                    let obj = trainer.train_step(
                        ids,
                        pos,
                        self.doc_vectors.row_mut(row),
                        &mut self.word_vectors,
                        &mut self.output_vectors,
                        lr,
                        &mut rng,
                    );
                    obj_sum += obj.as_f64();
                    done += 1;
                }
            }
            self.check_finite()?;
            trace.epoch_objective.push(if positions > 0 { obj_sum / positions as f64 } else { 0.0 });
        }
        Ok(trace)
    }

    /// Optimize a fresh document vector against frozen word and output
    /// vectors. Unknown tokens are ignored.
    pub fn infer_vector<S: AsRef<str>>(&self, tokens: &[S], steps: usize, seed: u64) -> Result<Vec<T>> {
        if steps == 0 {
            return Err(Error::InvalidArgument("infer_vector needs at least one step".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc = init_vector(self.dim(), &mut rng);
        let ids = self.vocab.encode(tokens);
        if ids.is_empty() {
            return Ok(doc);
        }
        let total = (steps * ids.len()) as f64;
        let (lr0, lr_min) = (self.config.initial_lr, self.config.min_lr);
        let mut trainer = Trainer::new(self.dim(), &self.config, &self.sampler);
        let mut done = 0usize;
        for _ in 0..steps {
            for pos in 0..ids.len() {
                let lr = T::lit((lr0 - (lr0 - lr_min) * done as f64 / total).max(lr_min));
                trainer.infer_step(&ids, pos, &mut doc, &self.word_vectors, &self.output_vectors, lr, &mut rng);
                done += 1;
            }
        }
        if doc.iter().all(|v| v.is_finite()) {
            Ok(doc)
        } else {
            Err(Error::NumericOverflow("doc2vec inference"))
        }
    }

    /// Trained vectors for `corpus`, one row per document in corpus order.
    pub fn embed_corpus(&self, corpus: &[Document]) -> Result<Matrix<T>> {
        let dim = self.dim();
        let mut out = Matrix::zeros(corpus.len(), dim);
        for (i, d) in corpus.iter().enumerate() {
            let row = self.doc_row(d.id).ok_or(Error::UnknownDocument(d.id))?;
            out.row_mut(i).copy_from_slice(self.doc_vectors.row(row));
        }
        Ok(out)
    }
}

/// Build, initialize and train in one call.
pub fn train_doc2vec<T: Real>(corpus: &[Document], config: &Doc2VecConfig) -> Result<Doc2VecModel<T>> {
    Ok(train_doc2vec_traced(corpus, config)?.0)
}

pub fn train_doc2vec_traced<T: Real>(corpus: &[Document], config: &Doc2VecConfig) -> Result<(Doc2VecModel<T>, TrainingTrace)> {
    let mut model = Doc2VecModel::initialize(corpus, config)?;
    let trace = model.train(corpus)?;
    Ok((model, trace))
}

pub fn infer_vector<T: Real, S: AsRef<str>>(model: &Doc2VecModel<T>, tokens: &[S], steps: usize, seed: u64) -> Result<DocVector<T>> {
    Ok(DocVector { id: -1, values: model.infer_vector(tokens, steps, seed)? })
}

pub fn embed_corpus<T: Real>(model: &Doc2VecModel<T>, corpus: &[Document]) -> Result<Matrix<T>> {
    model.embed_corpus(corpus)
}
