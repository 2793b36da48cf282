use std::collections::HashSet;

use crate::error::{Error, Result};

const ENGLISH: &str = include_str!("../../data/stopwords_en.txt");

/// SHA-256 of the shipped English list; changing the list changes results.
pub const ENGLISH_SHA256: &str = "019f104ba2ed07436d05f9cdd3383034ad66014edc27fc651f837e1a038b6451";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    entries: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = HashSet::new();
        for w in words {
            let w = w.as_ref();
            if w.is_empty() || w.to_lowercase() != w {
                return Err(Error::InvalidArgument(format!("stopword `{w}` must be non-empty lowercase")));
            }
            entries.insert(w.to_string());
        }
        if entries.is_empty() {
            return Err(Error::InvalidArgument("stopword list is empty".into()));
        }
        Ok(Self { entries })
    }

    /// The fixed 179-word English list shipped with the crate.
    pub fn english() -> Self {
        Self::new(ENGLISH.lines().map(str::trim).filter(|l| !l.is_empty())).expect("bundled list is valid")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn english_list_checksum() -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(ENGLISH.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_list_is_pinned() {
        let list = StopwordList::english();
        assert_eq!(list.len(), 179);
        assert_eq!(english_list_checksum(), ENGLISH_SHA256);
        assert!(list.contains("the") && list.contains("don't"));
    }

    #[test]
    fn rejects_uppercase_and_empty() {
        assert!(StopwordList::new(["The"]).is_err());
        assert!(StopwordList::new(Vec::<String>::new()).is_err());
    }
}
