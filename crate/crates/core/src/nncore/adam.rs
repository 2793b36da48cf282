use crate::error::{Error, Result};
use crate::scalar::Real;

use super::Matrix;

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }

    pub fn for_matrix(p: &Matrix<T>) -> Self {
        Self::new(p.as_slice().len())
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Real>(params: &mut Matrix<T>, grads: &Matrix<T>, state: &mut AdamState<T>, lr: T) -> Result<()> {
    if params.shape() != grads.shape() {
        return Err(Error::shape(format!("{:?}", params.shape()), format!("{:?}", grads.shape())));
    }
    adam_step_slice(params.as_mut_slice(), grads.as_slice(), state, lr)
}

pub fn adam_step_slice<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, lr: T) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::shape(params.len(), format!("grads {} / state {}", grads.len(), state.m.len())));
    }
    if lr < T::zero() {
        return Err(Error::InvalidArgument("learning rate must be non-negative".into()));
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let t = state.t as i32;
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let mut finite = true;
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
        finite &= p.is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::NumericOverflow("adam update"))
    }
}

/// Adam over a fixed list of tensors.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: T,
    states: Vec<AdamState<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(lr: T, params: &[&Matrix<T>]) -> Self {
        Self { lr, states: params.iter().map(|p| AdamState::for_matrix(p)).collect() }
    }

    pub fn step(&mut self, params: Vec<&mut Matrix<T>>, grads: Vec<&Matrix<T>>) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::shape(self.states.len(), params.len()));
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(self.states.iter_mut()) {
            adam_step(p, g, s, self.lr)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Matrix::from_vec(1, 3, vec![1.0, -2.0, 3.0]).unwrap();
        let g = Matrix::zeros(1, 3);
        let mut s = AdamState::for_matrix(&p);
        adam_step(&mut p, &g, &mut s, 0.1).unwrap();
        assert_eq!(p.as_slice(), &[1.0, -2.0, 3.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = Matrix::from_vec(1, 3, vec![0.0, 0.0, 0.0]).unwrap();
        let g = Matrix::from_vec(1, 3, vec![2.5, -0.3, 40.0]).unwrap();
        let mut s = AdamState::for_matrix(&p);
        adam_step(&mut p, &g, &mut s, 0.01).unwrap();
        for (x, sign) in p.as_slice().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - sign * 0.01_f64).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn zero_lr_is_bit_identical() {
        let orig = vec![0.123456789, -9.87, 1e-300];
        let mut p = Matrix::from_vec(1, 3, orig.clone()).unwrap();
        let g = Matrix::from_vec(1, 3, vec![1.0, -4.0, 7.0]).unwrap();
        let mut s = AdamState::for_matrix(&p);
        for _ in 0..5 {
            adam_step(&mut p, &g, &mut s, 0.0).unwrap();
        }
        assert_eq!(p.as_slice(), orig.as_slice());
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Matrix::<f64>::zeros(2, 2);
        let g = Matrix::zeros(1, 4);
        let mut s = AdamState::for_matrix(&p);
        assert!(matches!(adam_step(&mut p, &g, &mut s, 0.1), Err(Error::ShapeMismatch { .. })));
    }
}
