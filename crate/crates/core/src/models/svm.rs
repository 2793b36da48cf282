//! Soft-margin C-SVM with an RBF kernel, solved by SMO using the maximal
//! violating pair, with an LRU kernel-row cache.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::{dot, Real};

use super::check_binary;
use super::platt::{platt_calibrate, PlattScaling};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub c: f64,
    /// `None` selects `1 / (d * mean feature variance)`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    pub cache_bytes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, gamma: None, tolerance: 1e-3, cache_bytes: 256 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T> {
    /// Support vectors, one per row.
    pub support: Matrix<T>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<T>,
    pub bias: T,
    pub gamma: T,
    pub platt: PlattScaling<T>,
}

/// Full solver output: the deployable model plus the dual solution over
/// every training example.
#[derive(Debug, Clone)]
pub struct SvmFit<T> {
    pub model: SvmModel<T>,
    pub alpha: Vec<T>,
    pub iterations: usize,
    pub cache_evictions: usize,
}

pub fn scale_gamma<T: Real>(x: &Matrix<T>) -> T {
    let (n, d) = x.shape();
    let nf = T::from_usize_lossy(n);
    let mut total = T::zero();
    for j in 0..d {
        let mean = (0..n).map(|i| x.get(i, j)).sum::<T>() / nf;
        total += (0..n).map(|i| (x.get(i, j) - mean).powi(2)).sum::<T>() / nf;
    }
    let var = total / T::from_usize_lossy(d.max(1));
    if var > T::zero() {
        T::one() / (T::from_usize_lossy(d) * var)
    } else {
        T::one()
    }
}

fn rbf<T: Real>(a: &[T], b: &[T], gamma: T) -> T {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        s += d * d;
    }
    (-gamma * s).exp()
}

/// Least-recently-used cache of full kernel rows.
pub struct KernelCache<'a, T> {
    x: &'a Matrix<T>,
    norms: Vec<T>,
    gamma: T,
    capacity: usize,
    rows: HashMap<usize, (Vec<T>, u64)>,
    order: BTreeMap<u64, usize>,
    clock: u64,
    pub evictions: usize,
}

impl<'a, T: Real> KernelCache<'a, T> {
    pub fn new(x: &'a Matrix<T>, gamma: T, budget_bytes: usize) -> Result<Self> {
        let row_bytes = x.rows() * std::mem::size_of::<T>();
        let capacity = budget_bytes / row_bytes.max(1);
        if capacity < 2 {
            return Err(Error::BudgetTooSmall { budget: budget_bytes, row_bytes });
        }
        let norms = (0..x.rows()).map(|i| dot(x.row(i), x.row(i))).collect();
        Ok(Self { x, norms, gamma, capacity, rows: HashMap::new(), order: BTreeMap::new(), clock: 0, evictions: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.rows.contains_key(&i)
    }

    fn compute(&self, i: usize) -> Vec<T> {
        let xi = self.x.row(i);
        let two = T::lit(2.0);
        (0..self.x.rows())
            .map(|t| {
                let d2 = (self.norms[i] + self.norms[t] - two * dot(xi, self.x.row(t))).max(T::zero());
                (-self.gamma * d2).exp()
            })
            .collect()
    }

    /// Kernel row `K(x_i, x_t)` for every `t`.
    pub fn row(&mut self, i: usize) -> &[T] {
        self.clock += 1;
        let now = self.clock;
        if let Some((_, stamp)) = self.rows.get_mut(&i) {
            self.order.remove(stamp);
            *stamp = now;
            self.order.insert(now, i);
        } else {
            if self.rows.len() >= self.capacity {
                let (&old, &victim) = self.order.iter().next().expect("cache non-empty");
                self.order.remove(&old);
                self.rows.remove(&victim);
                self.evictions += 1;
            }
            let r = self.compute(i);
            self.rows.insert(i, (r, now));
            self.order.insert(now, i);
        }
        &self.rows[&i].0
    }
}

fn in_up<T: Real>(y: i8, a: T, c: T) -> bool {
    (y == 1 && a < c) || (y == -1 && a > T::zero())
}

fn in_low<T: Real>(y: i8, a: T, c: T) -> bool {
    (y == 1 && a > T::zero()) || (y == -1 && a < c)
}

pub fn train_svm_smo<T: Real>(x: &Matrix<T>, labels: &[u8], config: &SvmConfig) -> Result<SvmFit<T>> {
    check_binary(labels, x.rows())?;
    if !(config.c > 0.0) || !(config.tolerance > 0.0) {
        return Err(Error::InvalidArgument("svm C and tolerance must be positive".into()));
    }
    let n = x.rows();
    let gamma = config.gamma.map(T::lit).unwrap_or_else(|| scale_gamma(x));
    let c = T::lit(config.c);
    let eps = T::lit(config.tolerance);
    let tau = T::lit(1e-12);
    let y: Vec<i8> = labels.iter().map(|&l| if l == 1 { 1 } else { -1 }).collect();
    let yf: Vec<T> = y.iter().map(|&v| T::lit(v as f64)).collect();
    let mut cache = KernelCache::new(x, gamma, config.cache_bytes)?;
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;

    loop {
        // maximal violating pair
        let mut i = usize::MAX;
        let mut gmax = T::neg_infinity();
        let mut j = usize::MAX;
        let mut gmin = T::infinity();
        for t in 0..n {
            let v = -yf[t] * grad[t];
            if in_up(y[t], alpha[t], c) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(y[t], alpha[t], c) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < eps {
            break;
        }
        if iterations >= max_iter {
            log::warn!("smo stopped at the iteration cap with gap {}", (gmax - gmin).as_f64());
            break;
        }
        iterations += 1;

        let ki: Vec<T> = cache.row(i).to_vec();
        let kj: Vec<T> = cache.row(j).to_vec();
        let kij = ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let mut quad = T::lit(2.0) + T::lit(2.0) * kij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > T::zero() {
                if aj < T::zero() {
                    aj = T::zero();
                    ai = diff;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = -diff;
            }
            if diff > T::zero() {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = T::lit(2.0) - T::lit(2.0) * kij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < T::zero() {
                aj = T::zero();
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += yf[t] * (yf[i] * ki[t] * dai + yf[j] * kj[t] * daj);
        }
    }

    // bias
    let (mut ub, mut lb, mut sum_free, mut nfree) = (T::infinity(), T::neg_infinity(), T::zero(), 0usize);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if alpha[t] >= c {
            if y[t] == -1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= T::zero() {
            if y[t] == 1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nfree += 1;
            sum_free += yg;
        }
    }
    let rho = if nfree > 0 { sum_free / T::from_usize_lossy(nfree) } else { (ub + lb) / T::lit(2.0) };
    let bias = -rho;

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > T::zero()).collect();
    let support = x.select_rows(&sv);
    let coef: Vec<T> = sv.iter().map(|&t| alpha[t] * yf[t]).collect();
    // in-sample decision values: f = y G + y + b ... recovered from the gradient
    let decision: Vec<T> = (0..n).map(|t| yf[t] * (grad[t] + T::one()) + bias).collect();
    if decision.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow("svm training"));
    }
    let platt = platt_calibrate(&decision, labels)?;
    Ok(SvmFit {
        model: SvmModel { support, coef, bias, gamma, platt },
        alpha,
        iterations,
        cache_evictions: cache.evictions,
    })
}

impl<T: Real> SvmModel<T> {
    pub fn decision_value(&self, x: &[T]) -> Result<T> {
        if x.len() != self.support.cols() {
            return Err(Error::shape(self.support.cols(), x.len()));
        }
        let mut f = self.bias;
        for (s, &c) in self.coef.iter().enumerate() {
            f += c * rbf(self.support.row(s), x, self.gamma);
        }
        Ok(f)
    }

    pub fn predict_proba(&self, x: &[T]) -> Result<T> {
        Ok(self.platt.probability(self.decision_value(x)?))
    }
}

/// Largest KKT violation over the training set:
/// `alpha = 0 => y f >= 1 - v`, `0 < alpha < C => |y f - 1| <= v`,
/// `alpha = C => y f <= 1 + v`.
pub fn kkt_max_violation<T: Real>(fit: &SvmFit<T>, x: &Matrix<T>, labels: &[u8], c: f64) -> Result<T> {
    let c = T::lit(c);
    let mut worst = T::zero();
    for i in 0..x.rows() {
        let yi = if labels[i] == 1 { T::one() } else { -T::one() };
        let m = yi * fit.model.decision_value(x.row(i))?;
        let a = fit.alpha[i];
        let v = if a <= T::zero() {
            (T::one() - m).max(T::zero())
        } else if a >= c {
            (m - T::one()).max(T::zero())
        } else {
            (m - T::one()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_is_shattered() {
        let x = Matrix::from_vec(4, 2, vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let y = [0, 0, 1, 1];
        let cfg = SvmConfig { c: 10.0, gamma: Some(1.0), ..Default::default() };
        let fit = train_svm_smo(&x, &y, &cfg).unwrap();
        for i in 0..4 {
            let f = fit.model.decision_value(x.row(i)).unwrap();
            assert_eq!((f > 0.0) as u8, y[i], "f={f}");
        }
        assert!(kkt_max_violation(&fit, &x, &y, 10.0).unwrap() < 1e-3);
    }

    #[test]
    fn cache_budget_and_lru() {
        let x = Matrix::<f64>::zeros(10, 2);
        let row = 10 * 8;
        assert!(matches!(KernelCache::new(&x, 1.0, row), Err(Error::BudgetTooSmall { .. })));
        let mut c = KernelCache::new(&x, 1.0, 2 * row).unwrap();
        c.row(0);
        c.row(1);
        c.row(0);
        c.row(2);
        assert!(c.contains(0) && c.contains(2) && !c.contains(1));
        assert_eq!(c.evictions, 1);
        assert_eq!(c.row(3), &[1.0; 10][..]);
    }

    #[test]
    fn single_class() {
        let x = Matrix::<f64>::zeros(3, 2);
        assert!(matches!(train_svm_smo(&x, &[0, 0, 0], &SvmConfig::default()), Err(Error::SingleClass)));
    }
}
