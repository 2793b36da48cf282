//! Sigmoid calibration of decision values (Newton method with backtracking
//! and smoothed targets).

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattScaling<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> PlattScaling<T> {
    /// `1 / (1 + exp(a f + b))`
    pub fn probability(&self, f: T) -> T {
        sigmoid(-(self.a * f + self.b))
    }
}

fn objective(dec: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    dec.iter()
        .zip(t)
        .map(|(&f, &t)| {
            let z = f * a + b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

pub fn platt_calibrate<T: Real>(decision: &[T], labels: &[u8]) -> Result<PlattScaling<T>> {
    if decision.len() != labels.len() {
        return Err(Error::shape(labels.len(), decision.len()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let hi = (pos as f64 + 1.0) / (pos as f64 + 2.0);
    let lo = 1.0 / (neg as f64 + 2.0);
    let t: Vec<f64> = labels.iter().map(|&y| if y == 1 { hi } else { lo }).collect();
    let dec: Vec<f64> = decision.iter().map(|v| v.as_f64()).collect();

    let (max_iter, min_step, sigma) = (100, 1e-10, 1e-12);
    let mut a = 0.0;
    let mut b = ((neg as f64 + 1.0) / (pos as f64 + 1.0)).ln();
    let mut fval = objective(&dec, &t, a, b);
    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(&dec, &t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NumericOverflow("platt scaling"));
    }
    Ok(PlattScaling { a: T::lit(a), b: T::lit(b) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_values_give_negative_slope() {
        let dec = [-2.0, -1.5, -1.0, -0.2, 0.3, 1.0, 1.4, 2.0];
        let y = [0, 0, 0, 1, 0, 1, 1, 1];
        let p = platt_calibrate(&dec, &y).unwrap();
        assert!(p.a < 0.0);
        assert!(p.probability(1.0) > p.probability(-1.0));
    }

    #[test]
    fn zero_signal_gives_smoothed_base_rate() {
        let dec = [0.0_f64; 10];
        let y = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        let p = platt_calibrate(&dec, &y).unwrap();
        let rate = (3.0 * (4.0 / 5.0) + 7.0 * (1.0 / 9.0)) / 10.0;
        assert!((p.probability(0.0) - rate).abs() < 1e-6);
        assert!((p.probability(0.0) - p.probability(5.0)).abs() < 1e-6);
    }

    #[test]
    fn single_class() {
        assert!(matches!(platt_calibrate(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }
}
