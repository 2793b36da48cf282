//! Stacked generalization: out-of-fold meta-features from the five base
//! models and an MLP meta-model on top.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::split::k_fold;
use crate::models::{fit_base, BaseModelKind, BaseModelsConfig, Features, TrainedBaseModel, TrainingSet};
use crate::nncore::{mlp_train, Matrix, Mlp, MlpConfig};
use crate::scalar::Real;

pub const META_WIDTH: usize = 5;

/// Anything that turns one document into a fake-probability.
pub trait Scorer<T>: Send + Sync {
    fn score(&self, features: &Features<'_, T>) -> Result<T>;
}

impl<T: Real> Scorer<T> for TrainedBaseModel<T> {
    fn score(&self, features: &Features<'_, T>) -> Result<T> {
        self.predict_proba(features)
    }
}

/// Trains one kind of base model on a subset of a training set.
pub trait BaseTrainer<T>: Send + Sync {
    fn kind(&self) -> BaseModelKind;
    fn train(&self, set: &TrainingSet<'_, T>, rows: &[usize], seed: u64) -> Result<Box<dyn Scorer<T>>>;
}

/// The production trainer for one kind.
#[derive(Debug, Clone)]
pub struct StandardTrainer {
    pub kind: BaseModelKind,
    pub config: BaseModelsConfig,
    pub threads: usize,
}

impl<T: Real> BaseTrainer<T> for StandardTrainer {
    fn kind(&self) -> BaseModelKind {
        self.kind
    }

    fn train(&self, set: &TrainingSet<'_, T>, rows: &[usize], seed: u64) -> Result<Box<dyn Scorer<T>>> {
        Ok(Box::new(fit_base(self.kind, &self.config, set, rows, seed, self.threads)?))
    }
}

pub fn standard_trainers(config: &BaseModelsConfig, threads: usize) -> Vec<StandardTrainer> {
    BaseModelKind::ALL.iter().map(|&kind| StandardTrainer { kind, config: config.clone(), threads }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackConfig {
    pub folds: usize,
    /// Score the training rows with models trained on all of them instead
    /// of out-of-fold.
    pub insample: bool,
    pub meta: MlpConfig,
}

impl Default for StackConfig {
    fn default() -> Self {
        Self { folds: 5, insample: false, meta: MlpConfig::default() }
    }
}

/// `N x 5` base probabilities with the fold that produced each row
/// (`None` for in-sample rows).
#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatureMatrix<T> {
    pub values: Matrix<T>,
    pub fold_of: Vec<Option<usize>>,
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Place per-kind scores into their fixed columns.
pub fn assemble_meta_row<T: Real>(scores: &[(BaseModelKind, T)]) -> Result<[T; META_WIDTH]> {
    let mut row = [T::nan(); META_WIDTH];
    for &(kind, s) in scores {
        row[kind.column()] = s;
    }
    if row.iter().any(|v| v.is_nan()) || scores.len() != META_WIDTH {
        return Err(Error::shape(META_WIDTH, scores.len()));
    }
    Ok(row)
}

fn check_trainers<T>(trainers: &[&dyn BaseTrainer<T>]) -> Result<()> {
    let kinds: Vec<BaseModelKind> = trainers.iter().map(|t| t.kind()).collect();
    if kinds.len() != META_WIDTH || BaseModelKind::ALL.iter().any(|k| !kinds.contains(k)) {
        return Err(Error::InvalidArgument("stacking needs exactly one trainer per base model kind".into()));
    }
    Ok(())
}

/// Out-of-fold meta-features. For each stratified fold every trainer is
/// fit on the other folds and scores the held-out rows.
pub fn build_meta_features<T: Real>(
    set: &TrainingSet<'_, T>,
    trainers: &[&dyn BaseTrainer<T>],
    config: &StackConfig,
    seed: u64,
    threads: usize,
) -> Result<MetaFeatureMatrix<T>> {
    check_trainers(trainers)?;
    let n = set.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut values = Matrix::zeros(n, META_WIDTH);
    if config.insample {
        let all: Vec<usize> = (0..n).collect();
        for t in trainers {
            let m = t.train(set, &all, seed)?;
            for i in 0..n {
                values.set(i, t.kind().column(), m.score(&set.features(i))?);
            }
        }
        return Ok(MetaFeatureMatrix { values, fold_of: vec![None; n] });
    }
    let folds = k_fold(set.labels, config.folds, seed)?;
    for (f, (_, val)) in folds.iter().enumerate() {
        let ones = val.iter().filter(|&&i| set.labels[i] == 1).count();
        if ones == 0 || ones == val.len() {
            return Err(Error::FoldTooSmall { fold: f, k: config.folds });
        }
    }
    let grid: Vec<(usize, usize)> = (0..folds.len()).flat_map(|f| (0..trainers.len()).map(move |t| (f, t))).collect();
    let run = |&(f, t): &(usize, usize)| -> Result<Vec<T>> {
        let (train, val) = &folds[f];
        let model = trainers[t].train(set, train, fold_seed(seed, f))?;
        val.iter().map(|&i| model.score(&set.features(i))).collect()
    };
    let cells: Vec<Result<Vec<T>>> = if threads == 0 {
        grid.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().map(run).collect())
    };
    let mut fold_of = vec![None; n];
    for (&(f, t), cell) in grid.iter().zip(cells) {
        let col = trainers[t].kind().column();
        for (&i, s) in folds[f].1.iter().zip(cell?) {
            values.set(i, col, s);
            fold_of[i] = Some(f);
        }
    }
    Ok(MetaFeatureMatrix { values, fold_of })
}

pub fn train_meta<T: Real>(meta: &Matrix<T>, labels: &[u8], config: &MlpConfig, seed: u64) -> Result<Mlp<T>> {
    if meta.cols() != META_WIDTH {
        return Err(Error::shape(META_WIDTH, meta.cols()));
    }
    let y: Vec<usize> = labels.iter().map(|&v| v as usize).collect();
    mlp_train(meta, &y, config, seed)
}

/// The deployable stack: five base models in column order and the meta MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct StackingModel<T> {
    pub bases: Vec<TrainedBaseModel<T>>,
    pub meta: Mlp<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction<T> {
    pub probability: T,
    /// 1 (fake) iff `probability >= 0.5`.
    pub label: u8,
    pub base_scores: [T; META_WIDTH],
}

/// Fake iff `p >= 0.5`; a tie counts as fake.
pub fn decide<T: Real>(p: T) -> u8 {
    (p >= T::lit(0.5)) as u8
}

pub struct StackFit<T> {
    pub model: StackingModel<T>,
    pub meta_features: MetaFeatureMatrix<T>,
}

/// Meta-features, meta MLP, then every base model refit on all rows.
pub fn train_stack<T: Real>(
    set: &TrainingSet<'_, T>,
    base: &BaseModelsConfig,
    config: &StackConfig,
    seed: u64,
    threads: usize,
) -> Result<StackFit<T>> {
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let trainers = standard_trainers(base, threads);
    let dyn_trainers: Vec<&dyn BaseTrainer<T>> = trainers.iter().map(|t| t as &dyn BaseTrainer<T>).collect();
    let meta_features = build_meta_features(set, &dyn_trainers, config, seed, threads)?;
    let meta = train_meta(&meta_features.values, set.labels, &config.meta, seed)?;
    let all: Vec<usize> = (0..set.len()).collect();
    let bases = BaseModelKind::ALL
        .iter()
        .map(|&k| fit_base(k, base, set, &all, seed, threads))
        .collect::<Result<Vec<_>>>()?;
    Ok(StackFit { model: StackingModel { bases, meta }, meta_features })
}

impl<T: Real> StackingModel<T> {
    pub fn base_scores(&self, features: &Features<'_, T>) -> Result<[T; META_WIDTH]> {
        let scores = self.bases.iter().map(|m| Ok((m.kind(), m.predict_proba(features)?))).collect::<Result<Vec<_>>>()?;
        assemble_meta_row(&scores)
    }

    pub fn combine(&self, base_scores: [T; META_WIDTH]) -> Prediction<T> {
        let probability = self.meta.proba(&base_scores)[1];
        Prediction { probability, label: decide(probability), base_scores }
    }

    pub fn predict(&self, features: &Features<'_, T>) -> Result<Prediction<T>> {
        Ok(self.combine(self.base_scores(features)?))
    }
}

pub fn predict<T: Real>(model: &StackingModel<T>, features: &Features<'_, T>) -> Result<Prediction<T>> {
    model.predict(features)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_meta_ties_to_fake() {
        let stack = StackingModel::<f64> { bases: Vec::new(), meta: Mlp::zeros(&[5, 64, 128, 64, 2]) };
        let p = stack.combine([0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.label, 1);
    }

    #[test]
    fn threshold_boundary() {
        assert_eq!(decide(0.5_f64), 1);
        assert_eq!(decide(0.5_f64 - f64::EPSILON), 0);
    }

    #[test]
    fn assembly_ignores_call_order() {
        use BaseModelKind::*;
        let a = assemble_meta_row(&[(BiLstm, 0.1), (LogReg, 0.2), (Svm, 0.3), (RandomForest, 0.4), (NaiveBayes, 0.5)]).unwrap();
        let b = assemble_meta_row(&[(NaiveBayes, 0.5), (Svm, 0.3), (BiLstm, 0.1), (RandomForest, 0.4), (LogReg, 0.2)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, [0.1, 0.2, 0.3, 0.4, 0.5]);
        assert!(assemble_meta_row(&[(Svm, 0.3)]).is_err());
    }
}
