//! BiLSTM base model over sequences of word vectors, trained with Adam,
//! dropout and early stopping on a held-out validation split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::{Adam, BiLstmNet, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiLstmConfig {
    /// Per-direction hidden widths of the stacked layers.
    pub layers: Vec<usize>,
    pub dense: usize,
    pub dropout: f64,
    pub max_seq_len: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for BiLstmConfig {
    fn default() -> Self {
        Self {
            layers: vec![64, 128, 64],
            dense: 64,
            dropout: 0.2,
            max_seq_len: 256,
            max_epochs: 25,
            batch_size: 32,
            learning_rate: 3e-4,
            patience: 5,
            validation_fraction: 0.1,
        }
    }
}

impl BiLstmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("bilstm: {m}")));
        if self.layers.is_empty() || self.layers.contains(&0) || self.dense == 0 {
            return bad("layer widths must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if self.max_seq_len == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("sequence length, batch size and epochs must be positive");
        }
        Ok(())
    }
}

/// Patience-based early stopping on a score where larger is better.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_epoch: Option<usize>,
    pub best_score: f64,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best_epoch: None, best_score: f64::NEG_INFINITY, wait: 0 }
    }

    /// Records one epoch; returns whether it improved on the best so far.
    pub fn update(&mut self, epoch: usize, score: f64) -> bool {
        if score > self.best_score {
            self.best_score = score;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            true
        } else {
            self.wait += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.wait >= self.patience
    }
}

/// Word-vector rows for the first `max_len` known tokens; an empty document
/// becomes a single zero vector.
pub fn sequence_input<T: Real>(tokens: &[usize], word_vectors: &Matrix<T>, max_len: usize) -> Result<Vec<Vec<T>>> {
    if tokens.is_empty() {
        return Ok(vec![vec![T::zero(); word_vectors.cols()]]);
    }
    tokens
        .iter()
        .take(max_len)
        .map(|&t| {
            if t < word_vectors.rows() {
                Ok(word_vectors.row(t).to_vec())
            } else {
                Err(Error::InvalidArgument(format!("token id {t} outside the vocabulary")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmModel<T> {
    pub net: BiLstmNet<T>,
    pub max_seq_len: usize,
}

impl<T: Real> BiLstmModel<T> {
    pub fn predict_proba(&self, tokens: &[usize], word_vectors: &Matrix<T>) -> Result<T> {
        if word_vectors.cols() != self.net.input_size() {
            return Err(Error::shape(self.net.input_size(), word_vectors.cols()));
        }
        let xs = sequence_input(tokens, word_vectors, self.max_seq_len)?;
        Ok(self.net.predict_proba(&xs)?[1])
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmFit<T> {
    pub model: BiLstmModel<T>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub validation_accuracy: Vec<f64>,
}

/// Stratified hold-out: `ceil(fraction * n_c)` of each class with at least
/// two members goes to validation.
fn holdout(y: &[u8], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for c in 0..2u8 {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.shuffle(rng);
        let k = if idx.len() >= 2 { ((fraction * idx.len() as f64).ceil() as usize).min(idx.len() - 1) } else { 0 };
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn train_bilstm<T: Real>(
    docs: &[&[usize]],
    word_vectors: &Matrix<T>,
    y: &[u8],
    config: &BiLstmConfig,
    seed: u64,
) -> Result<BiLstmFit<T>> {
    config.validate()?;
    if docs.len() != y.len() {
        return Err(Error::shape(docs.len(), y.len()));
    }
    if docs.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, val) = holdout(y, config.validation_fraction, &mut rng);
    let inputs: Vec<Vec<Vec<T>>> =
        docs.iter().map(|d| sequence_input(d, word_vectors, config.max_seq_len)).collect::<Result<_>>()?;

    let mut net = BiLstmNet::new(word_vectors.cols(), &config.layers, config.dense, 2, &mut rng);
    let mut opt = Adam::new(T::lit(config.learning_rate), &net.tensors());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = net.clone();
    let mut history = Vec::new();
    let mut order = train.clone();
    let dropout = (config.dropout > 0.0).then_some(config.dropout);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = net.zeros_like();
            for &i in batch {
                let d = dropout.map(|p| (p, &mut rng));
                net.loss_and_grad(&inputs[i], y[i] as usize, d, &mut grad)?;
            }
            let inv = T::one() / T::from_usize_lossy(batch.len());
            grad.tensors_mut().into_iter().for_each(|g| g.scale(inv));
            opt.step(net.tensors_mut(), grad.tensors()).map_err(|e| match e {
                Error::NumericOverflow(_) => Error::NumericOverflow("bilstm training"),
                other => other,
            })?;
        }
        // fall back to training accuracy when the split left no validation rows
        let monitor = if val.is_empty() { &train } else { &val };
        let mut correct = 0;
        for &i in monitor {
            let p = net.predict_proba(&inputs[i])?;
            correct += ((p[1] >= p[0]) as u8 == y[i]) as usize;
        }
        let acc = correct as f64 / monitor.len() as f64;
        history.push(acc);
        if stopper.update(epoch, acc) {
            best = net.clone();
        }
        if stopper.should_stop() {
            break;
        }
    }
    Ok(BiLstmFit {
        model: BiLstmModel { net: best, max_seq_len: config.max_seq_len },
        best_epoch: stopper.best_epoch.unwrap_or(0),
        epochs_run: history.len(),
        validation_accuracy: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stopping_patience() {
        let mut s = EarlyStopping::new(5);
        let scores = [0.5, 0.6, 0.7, 0.7, 0.7, 0.69, 0.7, 0.7, 0.9];
        let mut stopped = None;
        for (e, &v) in scores.iter().enumerate() {
            s.update(e + 1, v);
            if s.should_stop() {
                stopped = Some(e + 1);
                break;
            }
        }
        assert_eq!(s.best_epoch, Some(3));
        assert_eq!(stopped, Some(8));
    }

    #[test]
    fn empty_document_is_zero_vector() {
        let wv = Matrix::from_vec(2, 3, vec![1.0; 6]).unwrap();
        assert_eq!(sequence_input(&[], &wv, 4).unwrap(), vec![vec![0.0; 3]]);
        assert_eq!(sequence_input(&[0, 1, 0, 1, 0], &wv, 4).unwrap().len(), 4);
        assert!(sequence_input(&[7], &wv, 4).is_err());
    }

    #[test]
    fn holdout_is_stratified() {
        let y = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let (t, v) = holdout(&y, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(v.len(), 2);
        assert_eq!(t.len(), 18);
        assert_eq!(v.iter().map(|&i| y[i] as usize).sum::<usize>(), 1);
    }
}
