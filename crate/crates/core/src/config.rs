//! Run configuration: JSON with a fixed schema layered over a profile's
//! defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::corpus::SyntheticSpec;
use crate::embed::Doc2VecConfig;
use crate::ensemble::StackConfig;
use crate::error::{Error, Result};
use crate::eval::SplitSpec;
use crate::models::{BaseModelsConfig, BiLstmConfig};

pub const SEED_ENV: &str = "RELIANCE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Desk,
    Full,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Labelled CSV with `id,title,author,text,label` columns.
    Csv { path: PathBuf },
    /// Preprocessed cache written by `preprocess`.
    Cache { path: PathBuf },
    Synthetic { spec: SyntheticSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    pub dataset: DatasetSource,
    pub output_dir: PathBuf,
    /// Master seed. It is copied into the split and Doc2Vec seeds and
    /// drives every model seed.
    pub seed: u64,
    /// 0 runs everything sequentially.
    pub threads: usize,
    /// Stratified fraction of a CSV or cache corpus to keep. Synthetic
    /// corpora are used whole.
    pub subsample: Option<f64>,
    /// Train Doc2Vec on train and test documents together (labels unused).
    pub transductive: bool,
    pub split: SplitSpec,
    pub doc2vec: Doc2VecConfig,
    pub models: BaseModelsConfig,
    pub stack: StackConfig,
}

/// Two noisy overlapping topics: a few hundred short documents.
pub fn desk_synthetic() -> SyntheticSpec {
    SyntheticSpec {
        docs_per_topic: 100,
        doc_len: 30,
        topic_vocab: 50,
        shared_vocab: 50,
        shared_fraction: 0.6,
        label_noise: 0.05,
        seed: 7,
    }
}

impl RunConfig {
    /// Defaults used by `full` and as the base of `custom`.
    pub fn full(dataset: DatasetSource) -> Self {
        Self {
            profile: Profile::Full,
            dataset,
            output_dir: PathBuf::from("out"),
            seed: 42,
            threads: 0,
            subsample: None,
            transductive: false,
            split: SplitSpec::default(),
            doc2vec: Doc2VecConfig::default(),
            models: BaseModelsConfig::default(),
            stack: StackConfig::default(),
        }
    }

    pub fn desk(dataset: DatasetSource) -> Self {
        let mut c = Self::full(dataset);
        c.profile = Profile::Desk;
        c.subsample = Some(0.2);
        c.doc2vec.dim = 100;
        c.doc2vec.epochs = 20;
        c.models.svm.cache_bytes = 256 << 20;
        c.models.bilstm = BiLstmConfig { max_seq_len: 32, max_epochs: 5, ..BiLstmConfig::default() };
        c
    }

    fn base_for(profile: Profile) -> Self {
        let dataset = DatasetSource::Synthetic { spec: desk_synthetic() };
        match profile {
            Profile::Desk => Self::desk(dataset),
            Profile::Full => Self::full(dataset),
            Profile::Custom => Self { profile: Profile::Custom, ..Self::full(dataset) },
        }
    }

    /// Parse a JSON document, layering it over its profile's defaults.
    /// Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let Value::Object(map) = &user else {
            return Err(Error::Config("top level must be an object".into()));
        };
        let profile: Profile = match map.get("profile") {
            Some(p) => serde_json::from_value(p.clone()).map_err(|e| Error::Config(format!("profile: {e}")))?,
            None => Profile::Custom,
        };
        let mut merged = serde_json::to_value(Self::base_for(profile))?;
        // a user-supplied dataset replaces the default one wholesale
        if let (Value::Object(m), Some(d)) = (&mut merged, map.get("dataset")) {
            m.insert("dataset".into(), d.clone());
        }
        merge(&mut merged, &user);
        let mut config: Self = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        config.sync_seeds();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Apply `RELIANCE_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
            self.sync_seeds();
        }
        Ok(())
    }

    pub fn sync_seeds(&mut self) {
        self.split.seed = self.seed;
        self.doc2vec.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.doc2vec.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.models.bilstm.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.doc2vec.epochs == 0 || self.doc2vec.infer_steps == 0 {
            return bad("doc2vec epochs and infer_steps must be positive".into());
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return bad(format!("split.train_fraction {} outside (0, 1)", self.split.train_fraction));
        }
        if let Some(f) = self.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("subsample {f} outside (0, 1]"));
            }
        }
        if self.stack.folds < 2 {
            return bad("stack.folds must be at least 2".into());
        }
        match &self.dataset {
            DatasetSource::Csv { path } | DatasetSource::Cache { path } if !path.exists() => {
                return bad(format!("dataset {} does not exist", path.display()));
            }
            DatasetSource::Synthetic { spec } if spec.docs_per_topic == 0 || spec.doc_len == 0 || spec.topic_vocab == 0 => {
                return bad("synthetic corpus must be non-empty".into());
            }
            _ => {}
        }
        if self.profile == Profile::Full
            && (self.doc2vec.dim != 1200 || self.doc2vec.epochs != 50 || self.split.train_fraction != 0.8)
        {
            return bad("profile `full` locks doc2vec.dim=1200, doc2vec.epochs=50 and split.train_fraction=0.8".into());
        }
        Ok(())
    }

    /// Canonical JSON of every field that can change results (output
    /// directory and thread count excluded); object keys are sorted.
    pub fn canonical_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
            m.remove("threads");
        }
        Ok(serde_json::to_string(&v)?)
    }

    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_profile_defaults() {
        let c = RunConfig::from_json(r#"{"profile": "desk"}"#).unwrap();
        assert_eq!(c.doc2vec.dim, 100);
        assert_eq!(c.doc2vec.epochs, 20);
        assert_eq!(c.subsample, Some(0.2));
        assert_eq!(c.models.svm.cache_bytes, 256 << 20);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"profile": "desk", "sede": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"profile": "desk", "doc2vec": {"dimm": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"dataset": {"kind": "csv", "path": "x", "extra": 1}}"#).is_err());
    }

    #[test]
    fn full_profile_locks() {
        let c = RunConfig::from_json(r#"{"profile": "full", "doc2vec": {"dim": 100}}"#).unwrap();
        assert!(c.validate().is_err());
        assert!(RunConfig::from_json(r#"{"profile": "full"}"#).unwrap().validate().is_ok());
    }

    #[test]
    fn digest_is_whitespace_insensitive() {
        let a = RunConfig::from_json(r#"{"profile":"desk","seed":3}"#).unwrap();
        let b = RunConfig::from_json("{\n  \"seed\" : 3,\n  \"profile\" : \"desk\"\n}").unwrap();
        let c = RunConfig::from_json(r#"{"profile":"desk","seed":4}"#).unwrap();
        let d = RunConfig::from_json(r#"{"profile":"desk","seed":3,"threads":4,"output_dir":"elsewhere"}"#).unwrap();
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        assert_ne!(a.digest().unwrap(), c.digest().unwrap());
        assert_eq!(a.digest().unwrap(), d.digest().unwrap());
    }

    #[test]
    fn seed_propagates() {
        let c = RunConfig::from_json(r#"{"seed": 9}"#).unwrap();
        assert_eq!((c.split.seed, c.doc2vec.seed), (9, 9));
    }
}
