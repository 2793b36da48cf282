//! LSTM cells and bidirectional layers with backpropagation through time.
//!
//! Gate parameters are stacked in the order input, forget, output, cell
//! candidate: rows `[0,H)` belong to the input gate, `[H,2H)` to the forget
//! gate and so on.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Real};

use super::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams<T> {
    /// Input-to-gate weights, `4H x I`.
    pub w: Matrix<T>,
    /// Recurrent weights, `4H x H`.
    pub u: Matrix<T>,
    /// Gate biases, `1 x 4H`.
    pub b: Matrix<T>,
}

/// Intermediates kept from the forward step for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    pub h_prev: Vec<T>,
    pub c_prev: Vec<T>,
    /// Activated gates `[i, f, o, g]`, length `4H`.
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
}

impl<T: Real> LstmLayerParams<T> {
    /// Glorot-uniform weights, zero biases except forget bias 1.0.
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut b = Matrix::zeros(1, 4 * hidden);
        for v in &mut b.as_mut_slice()[hidden..2 * hidden] {
            *v = T::one();
        }
        Self { w: Matrix::glorot(4 * hidden, input, rng), u: Matrix::glorot(4 * hidden, hidden, rng), b }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self { w: Matrix::zeros(4 * hidden, input), u: Matrix::zeros(4 * hidden, hidden), b: Matrix::zeros(1, 4 * hidden) }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.u.cols()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size(), self.hidden_size())
    }

    pub fn tensors(&self) -> [&Matrix<T>; 3] {
        [&self.w, &self.u, &self.b]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix<T>; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }

    fn step(&self, x: &[T], h_prev: &[T], c_prev: &[T]) -> LstmCache<T> {
        let h = self.hidden_size();
        let mut z = self.w.matvec(x);
        for (r, zr) in z.iter_mut().enumerate() {
            *zr += crate::scalar::dot(self.u.row(r), h_prev) + self.b.as_slice()[r];
        }
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = if k < 3 * h { sigmoid(*zk) } else { zk.tanh() };
        }
        let mut c = vec![T::zero(); h];
        let mut tanh_c = vec![T::zero(); h];
        for j in 0..h {
            let (i, f, g) = (z[j], z[h + j], z[3 * h + j]);
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
        }
        LstmCache { h_prev: h_prev.to_vec(), c_prev: c_prev.to_vec(), gates: z, c, tanh_c }
    }

    /// Backward through one step. Accumulates parameter gradients and
    /// returns `(dx, dh_prev, dc_prev)`.
    pub fn step_backward(
        &self,
        x: &[T],
        cache: &LstmCache<T>,
        dh: &[T],
        dc_next: &[T],
        grad: &mut LstmLayerParams<T>,
    ) -> (Vec<T>, Vec<T>, Vec<T>) {
        let h = self.hidden_size();
        let one = T::one();
        let g = &cache.gates;
        let mut dz = vec![T::zero(); 4 * h];
        let mut dc_prev = vec![T::zero(); h];
        for j in 0..h {
            let (i, f, o, gg) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
            let tc = cache.tanh_c[j];
            let dc = dh[j] * o * (one - tc * tc) + dc_next[j];
            dz[j] = dc * gg * i * (one - i);
            dz[h + j] = dc * cache.c_prev[j] * f * (one - f);
            dz[2 * h + j] = dh[j] * tc * o * (one - o);
            dz[3 * h + j] = dc * i * (one - gg * gg);
            dc_prev[j] = dc * f;
        }
        grad.w.add_outer(one, &dz, x);
        grad.u.add_outer(one, &dz, &cache.h_prev);
        for (gb, d) in grad.b.as_mut_slice().iter_mut().zip(&dz) {
            *gb += *d;
        }
        let mut dx = vec![T::zero(); self.input_size()];
        self.w.matvec_t_acc(&dz, &mut dx);
        let mut dh_prev = vec![T::zero(); h];
        self.u.matvec_t_acc(&dz, &mut dh_prev);
        (dx, dh_prev, dc_prev)
    }

    /// Run over a sequence (optionally in reverse time order). Outputs and
    /// caches are indexed by original time position.
    pub fn forward_sequence(&self, xs: &[Vec<T>], reverse: bool) -> Vec<LstmCache<T>> {
        let h = self.hidden_size();
        let n = xs.len();
        let mut caches: Vec<Option<LstmCache<T>>> = vec![None; n];
        let mut h_prev = vec![T::zero(); h];
        let mut c_prev = vec![T::zero(); h];
        for step in 0..n {
            let t = if reverse { n - 1 - step } else { step };
            let cache = self.step(&xs[t], &h_prev, &c_prev);
            h_prev = hidden_of(&cache, h);
            c_prev.clone_from(&cache.c);
            caches[t] = Some(cache);
        }
        caches.into_iter().map(|c| c.expect("every step visited")).collect()
    }

    /// BPTT for [`forward_sequence`]; `dhs[t]` is the loss gradient arriving
    /// at the hidden state of time `t`. Returns `dL/dx_t` for every `t`.
    pub fn backward_sequence(
        &self,
        xs: &[Vec<T>],
        caches: &[LstmCache<T>],
        dhs: &[Vec<T>],
        reverse: bool,
        grad: &mut LstmLayerParams<T>,
    ) -> Vec<Vec<T>> {
        let h = self.hidden_size();
        let n = xs.len();
        let mut dxs = vec![Vec::new(); n];
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        for step in (0..n).rev() {
            let t = if reverse { n - 1 - step } else { step };
            let dh: Vec<T> = dhs[t].iter().zip(&dh_next).map(|(a, b)| *a + *b).collect();
            let (dx, dh_prev, dc_prev) = self.step_backward(&xs[t], &caches[t], &dh, &dc_next, grad);
            dxs[t] = dx;
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        dxs
    }
}

pub fn hidden_of<T: Real>(cache: &LstmCache<T>, h: usize) -> Vec<T> {
    (0..h).map(|j| cache.gates[2 * h + j] * cache.tanh_c[j]).collect()
}

/// Single LSTM step: returns `(h_t, c_t)` plus the cache for backward.
pub fn lstm_cell<T: Real>(
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
    params: &LstmLayerParams<T>,
) -> Result<(Vec<T>, Vec<T>, LstmCache<T>)> {
    let hsz = params.hidden_size();
    if x.len() != params.input_size() || h_prev.len() != hsz || c_prev.len() != hsz {
        return Err(Error::shape(
            format!("x {} / h {hsz} / c {hsz}", params.input_size()),
            format!("x {} / h {} / c {}", x.len(), h_prev.len(), c_prev.len()),
        ));
    }
    let cache = params.step(x, h_prev, c_prev);
    Ok((hidden_of(&cache, hsz), cache.c.clone(), cache))
}

/// Forward and backward LSTMs over the same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmLayer<T> {
    pub fwd: LstmLayerParams<T>,
    pub bwd: LstmLayerParams<T>,
}

/// Caches of both directions for one sequence.
#[derive(Debug, Clone)]
pub struct BiLstmTrace<T> {
    pub fwd: Vec<LstmCache<T>>,
    pub bwd: Vec<LstmCache<T>>,
    pub outputs: Vec<Vec<T>>,
}

impl<T: Real> BiLstmLayer<T> {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let fwd = LstmLayerParams::new(input, hidden, rng);
        let bwd = LstmLayerParams::new(input, hidden, rng);
        Self { fwd, bwd }
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size()
    }

    pub fn output_size(&self) -> usize {
        2 * self.hidden_size()
    }

    pub fn zeros_like(&self) -> Self {
        Self { fwd: self.fwd.zeros_like(), bwd: self.bwd.zeros_like() }
    }

    pub fn forward(&self, xs: &[Vec<T>]) -> Result<BiLstmTrace<T>> {
        if xs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let fwd = self.fwd.forward_sequence(xs, false);
        let bwd = self.bwd.forward_sequence(xs, true);
        let (hf, hb) = (self.fwd.hidden_size(), self.bwd.hidden_size());
        let outputs = fwd
            .iter()
            .zip(&bwd)
            .map(|(f, b)| {
                let mut o = hidden_of(f, hf);
                o.extend(hidden_of(b, hb));
                o
            })
            .collect();
        Ok(BiLstmTrace { fwd, bwd, outputs })
    }

    pub fn backward(&self, xs: &[Vec<T>], trace: &BiLstmTrace<T>, douts: &[Vec<T>], grad: &mut BiLstmLayer<T>) -> Vec<Vec<T>> {
        let h = self.fwd.hidden_size();
        let dfs: Vec<Vec<T>> = douts.iter().map(|d| d[..h].to_vec()).collect();
        let dbs: Vec<Vec<T>> = douts.iter().map(|d| d[h..].to_vec()).collect();
        let mut dx = self.fwd.backward_sequence(xs, &trace.fwd, &dfs, false, &mut grad.fwd);
        let dx_b = self.bwd.backward_sequence(xs, &trace.bwd, &dbs, true, &mut grad.bwd);
        for (a, b) in dx.iter_mut().zip(dx_b) {
            crate::scalar::axpy(T::one(), &b, a);
        }
        dx
    }
}

/// Concatenated `[h_fwd; h_bwd]` output for every time step.
pub fn bilstm_layer<T: Real>(
    xs: &[Vec<T>],
    forward: &LstmLayerParams<T>,
    backward: &LstmLayerParams<T>,
) -> Result<Vec<Vec<T>>> {
    let layer = BiLstmLayer { fwd: forward.clone(), bwd: backward.clone() };
    Ok(layer.forward(xs)?.outputs)
}
