use rand::Rng;

use crate::scalar::Real;

use super::Matrix;

/// Fully connected layer `y = W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub w: Matrix<T>,
    pub b: Matrix<T>,
}

impl<T: Real> Dense<T> {
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        Self { w: Matrix::glorot(output, input, rng), b: Matrix::zeros(1, output) }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self { w: Matrix::zeros(output, input), b: Matrix::zeros(1, output) }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols()
    }

    pub fn output_size(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut y = self.w.matvec(x);
        for (yi, bi) in y.iter_mut().zip(self.b.as_slice()) {
            *yi += *bi;
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[T], dy: &[T], grad: &mut Dense<T>) -> Vec<T> {
        grad.w.add_outer(T::one(), dy, x);
        for (gb, d) in grad.b.as_mut_slice().iter_mut().zip(dy) {
            *gb += *d;
        }
        let mut dx = vec![T::zero(); self.input_size()];
        self.w.matvec_t_acc(dy, &mut dx);
        dx
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size(), self.output_size())
    }
}
