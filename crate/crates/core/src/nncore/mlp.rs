//! Multi-layer perceptron with tanh hidden units and a softmax output,
//! trained by mini-batch Adam on L2-penalised cross-entropy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::activation::{cross_entropy_loss, softmax};
use super::{Adam, Dense, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub alpha: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 128, 64], alpha: 1e-4, epochs: 50, learning_rate: 1e-3, batch_size: 32 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

struct Trace<T> {
    /// Input to each layer; last entry is the softmax output.
    activations: Vec<Vec<T>>,
}

impl<T: Real> Mlp<T> {
    pub fn new<R: rand::Rng>(sizes: &[usize], rng: &mut R) -> Self {
        Self { layers: sizes.windows(2).map(|w| Dense::new(w[0], w[1], rng)).collect() }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self { layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].input_size()];
        s.extend(self.layers.iter().map(Dense::output_size));
        s
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(Dense::zeros_like).collect() }
    }

    pub fn tensors(&self) -> Vec<&Matrix<T>> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }

    fn run(&self, x: &[T]) -> Trace<T> {
        let mut activations = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(activations.last().expect("non-empty"));
            activations.push(if i == last { softmax(&z) } else { z.into_iter().map(T::tanh).collect() });
        }
        Trace { activations }
    }

    pub fn proba(&self, x: &[T]) -> Vec<T> {
        self.run(x).activations.pop().expect("output layer")
    }

    /// Cross-entropy of one example, gradient accumulated into `grad`
    /// (no L2 term).
    pub fn loss_and_grad(&self, x: &[T], target: usize, grad: &mut Mlp<T>) -> T {
        let tr = self.run(x);
        let probs = tr.activations.last().expect("output");
        let (loss, mut delta) = cross_entropy_loss(probs, target);
        for l in (0..self.layers.len()).rev() {
            let dx = self.layers[l].backward(&tr.activations[l], &delta, &mut grad.layers[l]);
            if l > 0 {
                delta = dx.iter().zip(&tr.activations[l]).map(|(d, a)| *d * (T::one() - *a * *a)).collect();
            }
        }
        loss
    }

    /// `alpha/2 * sum of squared weights` (biases excluded).
    pub fn l2_penalty(&self, alpha: T) -> T {
        alpha * self.layers.iter().map(|l| l.w.sum_squares()).sum::<T>() / T::lit(2.0)
    }

    /// Mean cross-entropy plus the L2 penalty over a data set, together with
    /// its exact gradient.
    pub fn objective_and_grad(&self, x: &Matrix<T>, y: &[usize], alpha: T) -> (T, Mlp<T>) {
        let mut grad = self.zeros_like();
        let mut loss = T::zero();
        for (i, &t) in y.iter().enumerate() {
            loss += self.loss_and_grad(x.row(i), t, &mut grad);
        }
        let inv = T::one() / T::from_usize_lossy(y.len());
        for (g, l) in grad.layers.iter_mut().zip(&self.layers) {
            g.w.scale(inv);
            g.b.scale(inv);
            g.w.add_scaled(alpha, &l.w);
        }
        (loss * inv + self.l2_penalty(alpha), grad)
    }

    pub fn objective(&self, x: &Matrix<T>, y: &[usize], alpha: T) -> T {
        let mut scratch = self.zeros_like();
        let loss: T = y.iter().enumerate().map(|(i, &t)| self.loss_and_grad(x.row(i), t, &mut scratch)).sum();
        loss / T::from_usize_lossy(y.len()) + self.l2_penalty(alpha)
    }
}

fn check_labels(y: &[usize], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::shape(n, y.len()));
    }
    if n < 2 {
        return Err(Error::EmptyInput);
    }
    if y.iter().all(|&c| c == y[0]) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Result of [`mlp_train_traced`]: the model and the full-data objective
/// after every epoch.
pub struct MlpFit<T> {
    pub model: Mlp<T>,
    pub history: Vec<T>,
}

pub fn mlp_train<T: Real>(features: &Matrix<T>, labels: &[usize], config: &MlpConfig, seed: u64) -> Result<Mlp<T>> {
    Ok(mlp_train_traced(features, labels, config, seed, false)?.model)
}

pub fn mlp_train_traced<T: Real>(
    features: &Matrix<T>,
    labels: &[usize],
    config: &MlpConfig,
    seed: u64,
    trace: bool,
) -> Result<MlpFit<T>> {
    let n = features.rows();
    check_labels(labels, n)?;
    if config.hidden.contains(&0) || config.batch_size == 0 {
        return Err(Error::InvalidArgument("layer sizes and batch size must be positive".into()));
    }
    let classes = labels.iter().max().expect("non-empty") + 1;
    let mut sizes = vec![features.cols()];
    sizes.extend(&config.hidden);
    sizes.push(classes.max(2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Mlp::new(&sizes, &mut rng);
    let alpha = T::lit(config.alpha);
    let mut opt = Adam::new(T::lit(config.learning_rate), &model.tensors());
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::new();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = model.zeros_like();
            for &i in batch {
                model.loss_and_grad(features.row(i), labels[i], &mut grad);
            }
            let inv = T::one() / T::from_usize_lossy(batch.len());
            for (g, l) in grad.layers.iter_mut().zip(&model.layers) {
                g.w.scale(inv);
                g.b.scale(inv);
                g.w.add_scaled(alpha, &l.w);
            }
            opt.step(model.tensors_mut(), grad.tensors()).map_err(|e| match e {
                Error::NumericOverflow(_) => Error::NumericOverflow("mlp training"),
                other => other,
            })?;
        }
        if trace {
            history.push(model.objective(features, labels, alpha));
        }
    }
    Ok(MlpFit { model, history })
}

/// Probability of class 1 for every row.
pub fn mlp_predict_proba<T: Real>(model: &Mlp<T>, features: &Matrix<T>) -> Result<Vec<T>> {
    if features.cols() != model.input_size() {
        return Err(Error::shape(model.input_size(), features.cols()));
    }
    Ok((0..features.rows()).map(|i| model.proba(features.row(i))[1]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_predicts_half() {
        let m = Mlp::<f64>::zeros(&[3, 4, 2]);
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.0, 0.0, 9.0]).unwrap();
        assert_eq!(mlp_predict_proba(&m, &x).unwrap(), vec![0.5, 0.5]);
        assert!(mlp_predict_proba(&m, &Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::<f64>::zeros(3, 2);
        assert!(matches!(mlp_train(&x, &[1, 1, 1], &MlpConfig::default(), 0), Err(Error::SingleClass)));
    }
}
