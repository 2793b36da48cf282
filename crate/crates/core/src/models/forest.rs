//! Random forest of Gini trees grown to purity on bootstrap resamples.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_split: usize,
    /// `None` selects `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, min_samples_split: 2, max_features: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node<T> {
    Leaf { label: u8 },
    Split { feature: usize, threshold: T, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest<T> {
    pub trees: Vec<Tree<T>>,
    pub n_features: usize,
}

/// Split quality as the exact fraction `(sL * nR + sR * nL) / (nL * nR)`,
/// where `s = c0^2 + c1^2`; larger means lower weighted Gini impurity.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(l: [u64; 2], r: [u64; 2]) -> Self {
        let nl = (l[0] + l[1]) as u128;
        let nr = (r[0] + r[1]) as u128;
        let sl = (l[0] as u128).pow(2) + (l[1] as u128).pow(2);
        let sr = (r[0] as u128).pow(2) + (r[1] as u128).pow(2);
        Self { num: sl * nr + sr * nl, den: nl * nr }
    }

    fn cmp(&self, o: &Score) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    score: Score,
}

fn counts(y: &[u8], idx: &[usize]) -> [u64; 2] {
    let mut c = [0u64; 2];
    for &i in idx {
        c[y[i] as usize] += 1;
    }
    c
}

fn majority(c: [u64; 2]) -> u8 {
    (c[1] >= c[0]) as u8
}

/// Best threshold on one feature, or `None` when the feature is constant
/// over the node.
fn best_on_feature<T: Real>(x: &Matrix<T>, y: &[u8], idx: &[usize], f: usize, total: [u64; 2]) -> Option<Candidate<T>> {
    let mut vals: Vec<(T, u8)> = idx.iter().map(|&i| (x.get(i, f), y[i])).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut left = [0u64; 2];
    let mut best: Option<Candidate<T>> = None;
    for k in 0..vals.len() - 1 {
        left[vals[k].1 as usize] += 1;
        let (a, b) = (vals[k].0, vals[k + 1].0);
        if !(a < b) {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let score = Score::new(left, right);
        if best.as_ref().map_or(true, |c| score.cmp(&c.score) == Ordering::Greater) {
            let mut t = (a + b) / T::lit(2.0);
            if t >= b {
                t = a;
            }
            best = Some(Candidate { feature: f, threshold: t, score });
        }
    }
    best
}

fn better<T: Real>(cur: Option<Candidate<T>>, cand: Option<Candidate<T>>) -> Option<Candidate<T>> {
    match (cur, cand) {
        (None, c) => c,
        (c, None) => c,
        (Some(a), Some(b)) => {
            if b.score.cmp(&a.score) == Ordering::Greater {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

fn grow_tree<T: Real>(x: &Matrix<T>, y: &[u8], sample_idx: Vec<usize>, mtry: usize, min_split: usize, rng: &mut ChaCha8Rng) -> Tree<T> {
    let d = x.cols();
    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { label: 0 }];
    let mut stack = vec![(0usize, sample_idx)];
    while let Some((slot, idx)) = stack.pop() {
        let c = counts(y, &idx);
        if c[0] == 0 || c[1] == 0 || idx.len() < min_split {
            nodes[slot] = Node::Leaf { label: majority(c) };
            continue;
        }
        let mut drawn: Vec<usize> = sample(rng, d, mtry.min(d)).into_vec();
        drawn.sort_unstable();
        let mut best = None;
        for &f in &drawn {
            best = better(best, best_on_feature(x, y, &idx, f, c));
        }
        if best.is_none() {
            // every sampled feature is constant here: keep scanning the rest
            for f in (0..d).filter(|f| drawn.binary_search(f).is_err()) {
                best = better(best, best_on_feature(x, y, &idx, f, c));
            }
        }
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { label: majority(c) };
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, split.feature) <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { label: 0 });
        nodes.push(Node::Leaf { label: 0 });
        nodes[slot] = Node::Split { feature: split.feature, threshold: split.threshold, left, right: left + 1 };
        stack.push((left + 1, r));
        stack.push((left, l));
    }
    Tree { nodes }
}

impl<T: Real> Tree<T> {
    pub fn predict(&self, x: &[T]) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Trees are seeded independently from `(seed, tree index)`, so the result
/// does not depend on `threads`; `threads == 0` trains sequentially.
pub fn train_forest<T: Real>(x: &Matrix<T>, y: &[u8], config: &ForestConfig, seed: u64, threads: usize) -> Result<Forest<T>> {
    let n = x.rows();
    if n < 2 || y.len() != n {
        return Err(if y.len() != n { Error::shape(n, y.len()) } else { Error::EmptyInput });
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let d = x.cols();
    let mtry = config.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).max(1);
    let build = |t: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let idx: Vec<usize> = if config.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
        grow_tree(x, y, idx, mtry, config.min_samples_split.max(2), &mut rng)
    };
    let trees: Vec<Tree<T>> = if threads == 0 {
        (0..config.n_trees).map(build).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..config.n_trees).into_par_iter().map(build).collect())
    };
    Ok(Forest { trees, n_features: d })
}

impl<T: Real> Forest<T> {
    /// Fraction of trees voting fake.
    pub fn predict_proba(&self, x: &[T]) -> Result<T> {
        if x.len() != self.n_features {
            return Err(Error::shape(self.n_features, x.len()));
        }
        if self.trees.is_empty() {
            return Err(Error::UntrainedModel);
        }
        let votes = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        Ok(T::from_usize_lossy(votes) / T::from_usize_lossy(self.trees.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_features_give_stumps() {
        let x = Matrix::from_vec(5, 2, vec![1.0; 10]).unwrap();
        let f = train_forest(&x, &[1, 1, 0, 1, 0], &ForestConfig { bootstrap: false, ..Default::default() }, 3, 0).unwrap();
        assert_eq!(f.trees.len(), 100);
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
        assert_eq!(f.predict_proba(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn exact_tie_prefers_lowest_feature() {
        // both features separate perfectly
        let x = Matrix::from_vec(4, 2, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, max_features: Some(2), ..Default::default() };
        let f = train_forest(&x, &[0, 0, 1, 1], &cfg, 0, 0).unwrap();
        assert_eq!(f.trees[0].nodes[0], Node::Split { feature: 0, threshold: 1.5, left: 1, right: 2 });
    }

    #[test]
    fn too_small() {
        let x = Matrix::<f64>::zeros(1, 2);
        assert!(matches!(train_forest(&x, &[1], &ForestConfig::default(), 0, 0), Err(Error::EmptyInput)));
    }
}
