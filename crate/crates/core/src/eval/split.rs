//! Stratified train/test splits and k-fold partitions over label vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 42, stratified: true }
    }
}

fn class_indices(labels: &[u8], rng: &mut ChaCha8Rng) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        out[(y == 1) as usize].push(i);
    }
    out[0].shuffle(rng);
    out[1].shuffle(rng);
    out
}

/// Exactly `floor(fraction * N)` training indices; with stratification each
/// class contributes `floor(fraction * n_c)` plus a share of the remainder
/// (largest fractional part first). Both halves are returned sorted.
pub fn split_train_test(labels: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {} outside (0, 1)", spec.train_fraction)));
    }
    let n = labels.len();
    let ones = labels.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == n {
        return Err(Error::SingleClass);
    }
    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut test) = if spec.stratified {
        let classes = class_indices(labels, &mut rng);
        let exact: Vec<f64> = classes.iter().map(|c| spec.train_fraction * c.len() as f64).collect();
        let mut take: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order = [0usize, 1];
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        let mut left = n_train - take.iter().sum::<usize>();
        for &c in order.iter().cycle().take(4) {
            if left == 0 {
                break;
            }
            if take[c] < classes[c].len() {
                take[c] += 1;
                left -= 1;
            }
        }
        let (mut tr, mut te) = (Vec::new(), Vec::new());
        for c in 0..2 {
            tr.extend_from_slice(&classes[c][..take[c]]);
            te.extend_from_slice(&classes[c][take[c]..]);
        }
        (tr, te)
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let te = all.split_off(n_train);
        (all, te)
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified folds: each class is shuffled, the classes are concatenated
/// and positions are dealt round-robin, so fold sizes differ by at most one.
/// Returns `(train, validation)` index pairs, both sorted.
pub fn k_fold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(Error::FoldTooSmall { fold: 0, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = class_indices(labels, &mut rng);
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in classes[0].iter().chain(&classes[1]).enumerate() {
        fold_of[i] = pos % k;
    }
    Ok((0..k)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
            (train, val)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_two_size() {
        let labels: Vec<u8> = (0..20800).map(|i| (i % 2) as u8).collect();
        let (tr, te) = split_train_test(&labels, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (16640, 4160));
    }

    #[test]
    fn ten_balanced() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let (tr, _) = split_train_test(&labels, &SplitSpec::default()).unwrap();
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 1).count(), 4);
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 0).count(), 4);
    }

    #[test]
    fn odd_sizes_hit_the_floor() {
        let labels = [0, 0, 0, 1, 1, 1, 1];
        let (tr, te) = split_train_test(&labels, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (5, 2));
    }

    #[test]
    fn singleton_folds() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let folds = k_fold(&labels, 10, 1).unwrap();
        assert!(folds.iter().all(|(t, v)| v.len() == 1 && t.len() == 9));
    }

    #[test]
    fn errors() {
        assert!(matches!(split_train_test(&[1, 1], &SplitSpec::default()), Err(Error::SingleClass)));
        assert!(matches!(k_fold(&[0, 1], 3, 0), Err(Error::FoldTooSmall { .. })));
        assert!(matches!(k_fold(&[0, 1], 1, 0), Err(Error::FoldTooSmall { .. })));
    }
}
