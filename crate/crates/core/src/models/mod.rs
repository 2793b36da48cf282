//! The five base classifiers, each producing a probability that a document
//! is fake.

pub mod bilstm;
pub mod forest;
pub mod logreg;
pub mod mnb;
pub mod platt;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::Real;

pub use bilstm::{sequence_input, train_bilstm, BiLstmConfig, BiLstmFit, BiLstmModel, EarlyStopping};
pub use forest::{train_forest, Forest, ForestConfig, Node, Tree};
pub use logreg::{train_logreg, LogRegConfig, LogRegModel};
pub use mnb::{train_mnb, MinMaxScaler, MnbConfig, MnbModel, MultinomialNb};
pub use platt::{platt_calibrate, PlattScaling};
pub use svm::{kkt_max_violation, scale_gamma, train_svm_smo, KernelCache, SvmConfig, SvmFit, SvmModel};

/// Both classes present and lengths consistent.
pub(crate) fn check_binary(y: &[u8], rows: usize) -> Result<()> {
    if y.len() != rows {
        return Err(Error::shape(rows, y.len()));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not binary")));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseModelKind {
    BiLstm,
    LogReg,
    Svm,
    RandomForest,
    NaiveBayes,
}

impl BaseModelKind {
    /// Meta-feature column order.
    pub const ALL: [BaseModelKind; 5] =
        [Self::BiLstm, Self::LogReg, Self::Svm, Self::RandomForest, Self::NaiveBayes];

    pub fn column(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BiLstm => "bilstm",
            Self::LogReg => "logreg",
            Self::Svm => "svm",
            Self::RandomForest => "random_forest",
            Self::NaiveBayes => "naive_bayes",
        }
    }

    /// Row label used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::BiLstm => "BiLSTM",
            Self::LogReg => "LR",
            Self::Svm => "SVM",
            Self::RandomForest => "Random Forest",
            Self::NaiveBayes => "Naive Bayes",
        }
    }
}

impl fmt::Display for BaseModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown base model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaseModelsConfig {
    pub bilstm: BiLstmConfig,
    pub logreg: LogRegConfig,
    pub svm: SvmConfig,
    pub forest: ForestConfig,
    pub naive_bayes: MnbConfig,
}

/// Everything a base model may look at for one document.
#[derive(Debug, Clone, Copy)]
pub struct Features<'a, T> {
    pub vector: &'a [T],
    pub tokens: &'a [usize],
    pub word_vectors: &'a Matrix<T>,
}

/// Borrowed view of a labelled training corpus.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a, T> {
    /// Document vectors, one per row.
    pub vectors: &'a Matrix<T>,
    /// Vocabulary ids of each document's tokens.
    pub tokens: &'a [Vec<usize>],
    pub word_vectors: &'a Matrix<T>,
    pub labels: &'a [u8],
}

impl<'a, T: Real> TrainingSet<'a, T> {
    pub fn new(vectors: &'a Matrix<T>, tokens: &'a [Vec<usize>], word_vectors: &'a Matrix<T>, labels: &'a [u8]) -> Result<Self> {
        if tokens.len() != vectors.rows() {
            return Err(Error::shape(vectors.rows(), tokens.len()));
        }
        if labels.len() != vectors.rows() {
            return Err(Error::shape(vectors.rows(), labels.len()));
        }
        Ok(Self { vectors, tokens, word_vectors, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self, i: usize) -> Features<'a, T> {
        Features { vector: self.vectors.row(i), tokens: &self.tokens[i], word_vectors: self.word_vectors }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedBaseModel<T> {
    BiLstm(BiLstmModel<T>),
    LogReg(LogRegModel<T>),
    Svm(SvmModel<T>),
    RandomForest(Forest<T>),
    NaiveBayes(MnbModel<T>),
}

impl<T: Real> TrainedBaseModel<T> {
    pub fn kind(&self) -> BaseModelKind {
        match self {
            Self::BiLstm(_) => BaseModelKind::BiLstm,
            Self::LogReg(_) => BaseModelKind::LogReg,
            Self::Svm(_) => BaseModelKind::Svm,
            Self::RandomForest(_) => BaseModelKind::RandomForest,
            Self::NaiveBayes(_) => BaseModelKind::NaiveBayes,
        }
    }

    pub fn predict_proba(&self, f: &Features<'_, T>) -> Result<T> {
        let p = match self {
            Self::BiLstm(m) => m.predict_proba(f.tokens, f.word_vectors)?,
            Self::LogReg(m) => m.predict_proba(f.vector)?,
            Self::Svm(m) => m.predict_proba(f.vector)?,
            Self::RandomForest(m) => m.predict_proba(f.vector)?,
            Self::NaiveBayes(m) => m.predict_proba(f.vector)?,
        };
        if !p.is_finite() {
            return Err(Error::NumericOverflow("base model score"));
        }
        Ok(p.max(T::zero()).min(T::one()))
    }
}

/// Score with a model that must be of the requested kind.
pub fn score<T: Real>(kind: BaseModelKind, model: Option<&TrainedBaseModel<T>>, input: &Features<'_, T>) -> Result<T> {
    match model {
        Some(m) if m.kind() == kind => m.predict_proba(input),
        _ => Err(Error::UntrainedModel),
    }
}

/// Train one base model on the rows `rows` of `set`.
pub fn fit_base<T: Real>(
    kind: BaseModelKind,
    config: &BaseModelsConfig,
    set: &TrainingSet<'_, T>,
    rows: &[usize],
    seed: u64,
    threads: usize,
) -> Result<TrainedBaseModel<T>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let x = set.vectors.select_rows(rows);
    let y: Vec<u8> = rows.iter().map(|&i| set.labels[i]).collect();
    let seed = seed.wrapping_add(0x51ed_2701 * (kind.column() as u64 + 1));
    Ok(match kind {
        BaseModelKind::BiLstm => {
            let docs: Vec<&[usize]> = rows.iter().map(|&i| set.tokens[i].as_slice()).collect();
            TrainedBaseModel::BiLstm(train_bilstm(&docs, set.word_vectors, &y, &config.bilstm, seed)?.model)
        }
        BaseModelKind::LogReg => TrainedBaseModel::LogReg(train_logreg(&x, &y, &config.logreg)?),
        BaseModelKind::Svm => TrainedBaseModel::Svm(train_svm_smo(&x, &y, &config.svm)?.model),
        BaseModelKind::RandomForest => TrainedBaseModel::RandomForest(train_forest(&x, &y, &config.forest, seed, threads)?),
        BaseModelKind::NaiveBayes => TrainedBaseModel::NaiveBayes(MnbModel::fit(&x, &y, &config.naive_bayes)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_order_and_names() {
        let names: Vec<_> = BaseModelKind::ALL.iter().map(|k| k.name()).collect();
        assert_eq!(names, ["bilstm", "logreg", "svm", "random_forest", "naive_bayes"]);
        for (i, k) in BaseModelKind::ALL.iter().enumerate() {
            assert_eq!(k.column(), i);
            assert_eq!(k.name().parse::<BaseModelKind>().unwrap(), *k);
        }
    }

    #[test]
    fn score_requires_matching_kind() {
        let wv = Matrix::<f64>::zeros(1, 2);
        let f = Features { vector: &[0.0, 0.0], tokens: &[], word_vectors: &wv };
        let lr = TrainedBaseModel::LogReg(LogRegModel::zeros(2));
        assert_eq!(score(BaseModelKind::LogReg, Some(&lr), &f).unwrap(), 0.5);
        assert!(matches!(score(BaseModelKind::Svm, Some(&lr), &f), Err(Error::UntrainedModel)));
        assert!(matches!(score::<f64>(BaseModelKind::Svm, None, &f), Err(Error::UntrainedModel)));
    }
}
