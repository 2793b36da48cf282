//! Seeded two-topic corpus used when the real dataset is not available.
//!
//! Topic 0 documents draw from tokens `a<k>`, topic 1 from `b<k>`, and both
//! may mix in shared tokens `s<k>`. Labels equal the topic index, optionally
//! flipped with probability `label_noise`. Tokens are alphanumeric so the
//! normalization pipeline leaves them untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Document;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub docs_per_topic: usize,
    pub doc_len: usize,
    pub topic_vocab: usize,
    pub shared_vocab: usize,
    /// Probability that a token comes from the shared vocabulary.
    pub shared_fraction: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            docs_per_topic: 100,
            doc_len: 30,
            topic_vocab: 40,
            shared_vocab: 0,
            shared_fraction: 0.0,
            label_noise: 0.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn generate(&self) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = 2 * self.docs_per_topic;
        let mut docs = Vec::with_capacity(n);
        for i in 0..n {
            // Interleave topics so prefixes of the corpus stay balanced.
            let topic = (i % 2) as u8;
            let prefix = if topic == 0 { 'a' } else { 'b' };
            let tokens = (0..self.doc_len)
                .map(|_| {
                    if self.shared_vocab > 0 && rng.gen_bool(self.shared_fraction) {
                        format!("s{}", rng.gen_range(0..self.shared_vocab))
                    } else {
                        format!("{prefix}{}", rng.gen_range(0..self.topic_vocab))
                    }
                })
                .collect();
            let label = if self.label_noise > 0.0 && rng.gen_bool(self.label_noise) { 1 - topic } else { topic };
            docs.push(Document::new(i as i64, tokens, Some(label)));
        }
        docs
    }

    /// Topic of each generated document (before label noise).
    pub fn topics(&self) -> Vec<u8> {
        (0..2 * self.docs_per_topic).map(|i| (i % 2) as u8).collect()
    }
}
