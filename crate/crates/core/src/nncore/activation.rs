use crate::scalar::Real;

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = out.iter().copied().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// Two-class or multi-class cross-entropy on softmax output. Returns the
/// loss and its gradient with respect to the logits.
pub fn cross_entropy_loss<T: Real>(probs: &[T], target: usize) -> (T, Vec<T>) {
    let lo = T::lit(1e-12);
    let hi = T::one() - lo;
    let p = probs[target].max(lo).min(hi);
    let mut grad = probs.to_vec();
    grad[target] -= T::one();
    (-p.ln(), grad)
}
