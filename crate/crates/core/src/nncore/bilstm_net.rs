//! Stacked bidirectional LSTM classifier: BiLSTM layers, mean pooling over
//! time, a tanh dense layer and a softmax output.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::activation::{cross_entropy_loss, softmax};
use super::lstm::{BiLstmLayer, BiLstmTrace};
use super::{Dense, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmNet<T> {
    pub layers: Vec<BiLstmLayer<T>>,
    pub dense: Dense<T>,
    pub out: Dense<T>,
}

struct LayerTrace<T> {
    input: Vec<Vec<T>>,
    trace: BiLstmTrace<T>,
    mask: Option<Vec<Vec<T>>>,
}

struct NetTrace<T> {
    layers: Vec<LayerTrace<T>>,
    last_output: Vec<Vec<T>>,
    pooled: Vec<T>,
    hidden: Vec<T>,
    hidden_mask: Option<Vec<T>>,
    hidden_dropped: Vec<T>,
    probs: Vec<T>,
}

fn dropout_mask<T: Real, R: Rng>(len: usize, p: f64, rng: &mut R) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - p));
    (0..len).map(|_| if rng.gen_bool(p) { T::zero() } else { keep }).collect()
}

fn apply_mask<T: Real>(v: &[T], m: &[T]) -> Vec<T> {
    v.iter().zip(m).map(|(a, b)| *a * *b).collect()
}

impl<T: Real> BiLstmNet<T> {
    /// `layer_sizes` are per-direction hidden widths.
    pub fn new<R: Rng>(input: usize, layer_sizes: &[usize], dense: usize, classes: usize, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(layer_sizes.len());
        let mut width = input;
        for &h in layer_sizes {
            layers.push(BiLstmLayer::new(width, h, rng));
            width = 2 * h;
        }
        Self { layers, dense: Dense::new(width, dense, rng), out: Dense::new(dense, classes, rng) }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].fwd.input_size()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(BiLstmLayer::zeros_like).collect(),
            dense: self.dense.zeros_like(),
            out: self.out.zeros_like(),
        }
    }

    pub fn tensors(&self) -> Vec<&Matrix<T>> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.extend(l.fwd.tensors());
            v.extend(l.bwd.tensors());
        }
        v.extend([&self.dense.w, &self.dense.b, &self.out.w, &self.out.b]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut v = Vec::new();
        for l in &mut self.layers {
            v.extend(l.fwd.tensors_mut());
            v.extend(l.bwd.tensors_mut());
        }
        v.extend([&mut self.dense.w, &mut self.dense.b, &mut self.out.w, &mut self.out.b]);
        v
    }

    /// Output widths of every stage for a sequence of length `t`:
    /// per-layer `(t, width)`, pooled, dense, classes.
    pub fn stage_shapes(&self, t: usize) -> (Vec<(usize, usize)>, usize, usize, usize) {
        let layers = self.layers.iter().map(|l| (t, l.output_size())).collect();
        (layers, self.dense.input_size(), self.dense.output_size(), self.out.output_size())
    }

    fn check(&self, xs: &[Vec<T>]) -> Result<()> {
        if xs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let d = self.input_size();
        if let Some(x) = xs.iter().find(|x| x.len() != d) {
            return Err(Error::shape(d, x.len()));
        }
        Ok(())
    }

    fn run<R: Rng>(&self, xs: &[Vec<T>], dropout: Option<(f64, &mut R)>) -> Result<NetTrace<T>> {
        self.check(xs)?;
        let (p, mut rng) = match dropout {
            Some((p, r)) if p > 0.0 => (p, Some(r)),
            _ => (0.0, None),
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut input = xs.to_vec();
        for layer in &self.layers {
            let trace = layer.forward(&input)?;
            let (output, mask) = match rng.as_deref_mut() {
                Some(r) => {
                    let mask: Vec<Vec<T>> = trace.outputs.iter().map(|o| dropout_mask(o.len(), p, r)).collect();
                    let out = trace.outputs.iter().zip(&mask).map(|(o, m)| apply_mask(o, m)).collect();
                    (out, Some(mask))
                }
                None => (trace.outputs.clone(), None),
            };
            layers.push(LayerTrace { input: std::mem::replace(&mut input, output), trace, mask });
        }
        let last_output = input;
        let n = T::from_usize_lossy(last_output.len());
        let mut pooled = vec![T::zero(); last_output[0].len()];
        for o in &last_output {
            crate::scalar::axpy(T::one() / n, o, &mut pooled);
        }
        let hidden: Vec<T> = self.dense.forward(&pooled).into_iter().map(T::tanh).collect();
        let (hidden_dropped, hidden_mask) = match rng {
            Some(r) => {
                let m = dropout_mask(hidden.len(), p, r);
                (apply_mask(&hidden, &m), Some(m))
            }
            None => (hidden.clone(), None),
        };
        let probs = softmax(&self.out.forward(&hidden_dropped));
        Ok(NetTrace { layers, last_output, pooled, hidden, hidden_mask, hidden_dropped, probs })
    }

    /// Class probabilities with dropout disabled.
    pub fn predict_proba(&self, xs: &[Vec<T>]) -> Result<Vec<T>> {
        Ok(self.run::<rand_chacha::ChaCha8Rng>(xs, None)?.probs)
    }

    /// Cross-entropy of one sequence; accumulates its parameter gradient
    /// into `grad`. Dropout is active when `dropout` is given.
    pub fn loss_and_grad<R: Rng>(
        &self,
        xs: &[Vec<T>],
        target: usize,
        dropout: Option<(f64, &mut R)>,
        grad: &mut BiLstmNet<T>,
    ) -> Result<T> {
        let tr = self.run(xs, dropout)?;
        let (loss, dlogits) = cross_entropy_loss(&tr.probs, target);
        let mut dh = self.out.backward(&tr.hidden_dropped, &dlogits, &mut grad.out);
        if let Some(m) = &tr.hidden_mask {
            dh = apply_mask(&dh, m);
        }
        let dz: Vec<T> = dh.iter().zip(&tr.hidden).map(|(d, a)| *d * (T::one() - *a * *a)).collect();
        let dpooled = self.dense.backward(&tr.pooled, &dz, &mut grad.dense);
        let n = T::from_usize_lossy(tr.last_output.len());
        let share: Vec<T> = dpooled.iter().map(|v| *v / n).collect();
        let mut douts: Vec<Vec<T>> = vec![share; tr.last_output.len()];
        for (l, lt) in tr.layers.iter().enumerate().rev() {
            if let Some(mask) = &lt.mask {
                for (d, m) in douts.iter_mut().zip(mask) {
                    *d = apply_mask(d, m);
                }
            }
            douts = self.layers[l].backward(&lt.input, &lt.trace, &douts, &mut grad.layers[l]);
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stacked_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = BiLstmNet::<f64>::new(10, &[64, 128, 64], 64, 2, &mut rng);
        let (layers, pooled, dense, out) = net.stage_shapes(7);
        assert_eq!(layers, vec![(7, 128), (7, 256), (7, 128)]);
        assert_eq!((pooled, dense, out), (128, 64, 2));
        let xs = vec![vec![0.1; 10]; 7];
        let p = net.predict_proba(&xs).unwrap();
        assert_eq!(p.len(), 2);
        assert!(((p[0] + p[1]) - 1.0).abs() < 1e-12);
        assert!(net.predict_proba(&[]).is_err());
        assert!(net.predict_proba(&[vec![0.0; 3]]).is_err());
    }
}
