//! Multinomial naive Bayes with additive smoothing and uniform class priors,
//! plus the min-max scaler that maps signed embeddings to non-negative
//! pseudo-counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::Real;

use super::check_binary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnbConfig {
    pub alpha: f64,
}

impl Default for MnbConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialNb<T> {
    /// `log θ[c][j]`, `2 x d`.
    pub log_theta: Matrix<T>,
}

pub fn train_mnb<T: Real>(x: &Matrix<T>, y: &[u8], alpha: f64) -> Result<MultinomialNb<T>> {
    check_binary(y, x.rows())?;
    let d = x.cols();
    for i in 0..x.rows() {
        if let Some(j) = x.row(i).iter().position(|v| *v < T::zero()) {
            return Err(Error::NegativeFeature { row: i, col: j });
        }
    }
    let alpha = T::lit(alpha);
    let mut totals = Matrix::<T>::zeros(2, d);
    for (i, &c) in y.iter().enumerate() {
        crate::scalar::axpy(T::one(), x.row(i), totals.row_mut(c as usize));
    }
    let mut log_theta = Matrix::zeros(2, d);
    for c in 0..2 {
        let denom: T = totals.row(c).iter().copied().sum::<T>() + alpha * T::from_usize_lossy(d);
        for j in 0..d {
            log_theta.set(c, j, ((totals.get(c, j) + alpha) / denom).ln());
        }
    }
    Ok(MultinomialNb { log_theta })
}

impl<T: Real> MultinomialNb<T> {
    /// Normalized class posterior under uniform priors.
    pub fn posterior(&self, x: &[T]) -> Result<[T; 2]> {
        if x.len() != self.log_theta.cols() {
            return Err(Error::shape(self.log_theta.cols(), x.len()));
        }
        let joint: Vec<T> = (0..2).map(|c| crate::scalar::dot(self.log_theta.row(c), x)).collect();
        let m = joint[0].max(joint[1]);
        let e0 = (joint[0] - m).exp();
        let e1 = (joint[1] - m).exp();
        Ok([e0 / (e0 + e1), e1 / (e0 + e1)])
    }

    pub fn theta_row_sums(&self) -> [T; 2] {
        let s = |c: usize| self.log_theta.row(c).iter().map(|v| v.exp()).sum::<T>();
        [s(0), s(1)]
    }
}

/// Per-dimension min-max scaling to `[0, 1]` using training ranges; values
/// outside the training range are clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Real> MinMaxScaler<T> {
    pub fn fit(x: &Matrix<T>) -> Self {
        let d = x.cols();
        let mut min = vec![T::infinity(); d];
        let mut max = vec![T::neg_infinity(); d];
        for i in 0..x.rows() {
            for (j, &v) in x.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    pub fn transform(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.max[j] - self.min[j];
                if range > T::zero() {
                    ((v - self.min[j]) / range).max(T::zero()).min(T::one())
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    pub fn transform_matrix(&self, x: &Matrix<T>) -> Matrix<T> {
        let rows: Vec<Vec<T>> = (0..x.rows()).map(|i| self.transform(x.row(i))).collect();
        Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(0, x.cols()))
    }
}

/// Naive Bayes applied to min-max scaled embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct MnbModel<T> {
    pub scaler: MinMaxScaler<T>,
    pub nb: MultinomialNb<T>,
}

impl<T: Real> MnbModel<T> {
    pub fn fit(x: &Matrix<T>, y: &[u8], config: &MnbConfig) -> Result<Self> {
        check_binary(y, x.rows())?;
        let scaler = MinMaxScaler::fit(x);
        let nb = train_mnb(&scaler.transform_matrix(x), y, config.alpha)?;
        Ok(Self { scaler, nb })
    }

    pub fn predict_proba(&self, x: &[T]) -> Result<T> {
        if x.len() != self.scaler.min.len() {
            return Err(Error::shape(self.scaler.min.len(), x.len()));
        }
        Ok(self.nb.posterior(&self.scaler.transform(x))?[1])
    }
}
