use std::collections::HashMap;

use rand::Rng;

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Token inventory with dense indices ordered by descending count, ties
/// broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<u64>,
    total: u64,
}

impl Vocabulary {
    pub fn from_counts(mut entries: Vec<(String, u64)>) -> Self {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total = entries.iter().map(|e| e.1).sum();
        let index = entries.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        let (words, counts) = entries.into_iter().unzip();
        Self { index, words, counts, total }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// In-vocabulary token indices, unknown tokens skipped.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index_of(t.as_ref())).collect()
    }
}

pub fn build_vocab(corpus: &[Document], min_count: u64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let entries = counts.into_iter().filter(|&(_, c)| c >= min_count).map(|(w, c)| (w.to_string(), c)).collect();
    Ok(Vocabulary::from_counts(entries))
}

/// Draws token indices with probability proportional to `count^0.75`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub const POWER: f64 = 0.75;

    pub fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(Self::POWER);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.cumulative.last().copied().unwrap_or(0.0);
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> Document {
        Document::new(0, tokens.iter().map(|s| s.to_string()).collect(), None)
    }

    #[test]
    fn counts_and_order() {
        let corpus = vec![doc(&["a", "b", "a"])];
        let v = build_vocab(&corpus, 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.index_of("a"), Some(0));
        assert_eq!((v.count(0), v.count(1)), (2, 1));
        assert_eq!(v.total(), 3);
        let v2 = build_vocab(&corpus, 2).unwrap();
        assert_eq!(v2.words(), ["a"]);
        assert!(matches!(build_vocab(&[], 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build_vocab(&[doc(&["z", "y", "x", "y"])], 1).unwrap();
        assert_eq!(v.words(), ["y", "x", "z"]);
        assert_eq!(v.encode(&["x", "unknown", "z"]), vec![1, 2]);
    }
}
