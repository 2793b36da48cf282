//! L1-regularised logistic regression fitted by proximal gradient descent
//! (ISTA) with backtracking line search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::{dot, sigmoid, Real};

use super::check_binary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegConfig {
    pub l1_lambda: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { l1_lambda: 1e-4, max_iter: 1000, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub iterations: usize,
}

fn softplus<T: Real>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

/// Mean logistic loss (without the penalty).
fn loss<T: Real>(x: &Matrix<T>, y: &[u8], w: &[T], b: T) -> T {
    let n = T::from_usize_lossy(y.len());
    (0..y.len())
        .map(|i| {
            let z = dot(x.row(i), w) + b;
            softplus(z) - if y[i] == 1 { z } else { T::zero() }
        })
        .sum::<T>()
        / n
}

fn gradient<T: Real>(x: &Matrix<T>, y: &[u8], w: &[T], b: T) -> (Vec<T>, T) {
    let n = T::from_usize_lossy(y.len());
    let mut gw = vec![T::zero(); w.len()];
    let mut gb = T::zero();
    for i in 0..y.len() {
        let r = sigmoid(dot(x.row(i), w) + b) - T::lit(y[i] as f64);
        crate::scalar::axpy(r, x.row(i), &mut gw);
        gb += r;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

fn soft_threshold<T: Real>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}

pub fn train_logreg<T: Real>(x: &Matrix<T>, y: &[u8], config: &LogRegConfig) -> Result<LogRegModel<T>> {
    check_binary(y, x.rows())?;
    let d = x.cols();
    let lambda = T::lit(config.l1_lambda);
    let tol = T::lit(config.tolerance);
    let half = T::lit(0.5);
    let mut w = vec![T::zero(); d];
    let mut b = T::zero();
    let mut step = T::one();
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        let f = loss(x, y, &w, b);
        let (gw, gb) = gradient(x, y, &w, b);
        let (w_new, b_new) = loop {
            let w_new: Vec<T> = w.iter().zip(&gw).map(|(&wi, &gi)| soft_threshold(wi - step * gi, step * lambda)).collect();
            let b_new = b - step * gb;
            let mut lin = (b_new - b) * gb;
            let mut sq = (b_new - b) * (b_new - b);
            for j in 0..d {
                let dj = w_new[j] - w[j];
                lin += gw[j] * dj;
                sq += dj * dj;
            }
            if loss(x, y, &w_new, b_new) <= f + lin + sq / (T::lit(2.0) * step) || step < T::lit(1e-12) {
                break (w_new, b_new);
            }
            step *= half;
        };
        let change = w_new.iter().zip(&w).map(|(a, c)| (*a - *c).abs()).fold((b_new - b).abs(), T::max);
        w = w_new;
        b = b_new;
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("logistic regression"));
        }
        if change < tol {
            break;
        }
        step *= T::lit(1.25);
    }
    Ok(LogRegModel { weights: w, bias: b, iterations })
}

impl<T: Real> LogRegModel<T> {
    pub fn zeros(d: usize) -> Self {
        Self { weights: vec![T::zero(); d], bias: T::zero(), iterations: 0 }
    }

    pub fn predict_proba(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(Error::shape(self.weights.len(), x.len()));
        }
        Ok(sigmoid(dot(&self.weights, x) + self.bias))
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().filter(|w| **w != T::zero()).count()
    }
}
