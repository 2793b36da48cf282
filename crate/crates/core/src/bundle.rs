//! Model bundle: `RLNC` magic, u32 format version, u64 manifest length, a
//! canonical JSON manifest, then the component blobs. Blobs hold
//! little-endian u64 headers and f64 arrays; every component carries a
//! SHA-256 checksum that is verified on load.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::embed::{Doc2VecConfig, Doc2VecModel, Vocabulary};
use crate::ensemble::StackingModel;
use crate::error::{Error, Result};
use crate::eval::Pipeline;
use crate::models::{
    BaseModelKind, BiLstmModel, Forest, LogRegModel, MinMaxScaler, MnbModel, MultinomialNb, Node, PlattScaling, SvmModel,
    TrainedBaseModel, Tree,
};
use crate::nncore::{BiLstmLayer, BiLstmNet, Dense, LstmLayerParams, Matrix, Mlp};

pub const MAGIC: &[u8; 4] = b"RLNC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub name: String,
    /// Offset from the start of the blob section.
    pub offset: u64,
    pub length: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub created_at: String,
    pub config_digest: String,
    pub column_order: Vec<String>,
    pub components: Vec<ComponentEntry>,
}

/// A trained pipeline plus the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: RunConfig,
    pub pipeline: Pipeline,
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        v.iter().for_each(|x| self.f64(*x));
    }

    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn matrix(&mut self, m: &Matrix<f64>) {
        self.usize(m.rows());
        self.usize(m.cols());
        m.as_slice().iter().for_each(|x| self.f64(*x));
    }

    fn dense(&mut self, d: &Dense<f64>) {
        self.matrix(&d.w);
        self.matrix(&d.b);
    }

    fn lstm(&mut self, p: &LstmLayerParams<f64>) {
        self.matrix(&p.w);
        self.matrix(&p.u);
        self.matrix(&p.b);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
    what: &'a str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], what: &'a str) -> Self {
        Self { buf, at: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Bundle(format!("component `{}` is truncated", self.what)))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).ok().filter(|&v| v <= self.buf.len() * 8 + 1).ok_or_else(|| self.bad("implausible length"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| self.bad("invalid utf-8"))
    }

    fn matrix(&mut self) -> Result<Matrix<f64>> {
        let (r, c) = (self.usize()?, self.usize()?);
        let n = r.checked_mul(c).ok_or_else(|| self.bad("matrix too large"))?;
        let data = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(r, c, data)
    }

    fn dense(&mut self) -> Result<Dense<f64>> {
        Ok(Dense { w: self.matrix()?, b: self.matrix()? })
    }

    fn lstm(&mut self) -> Result<LstmLayerParams<f64>> {
        Ok(LstmLayerParams { w: self.matrix()?, u: self.matrix()?, b: self.matrix()? })
    }

    fn bad(&self, m: &str) -> Error {
        Error::Bundle(format!("component `{}`: {m}", self.what))
    }

    fn finish(&self) -> Result<()> {
        if self.at == self.buf.len() {
            Ok(())
        } else {
            Err(self.bad("trailing bytes"))
        }
    }
}

fn encode_doc2vec(m: &Doc2VecModel<f64>) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.str(&serde_json::to_string(&m.config)?);
    w.usize(m.vocab.len());
    for (word, &count) in m.vocab.words().iter().zip(m.vocab.counts()) {
        w.str(word);
        w.u64(count);
    }
    w.usize(m.doc_ids.len());
    m.doc_ids.iter().for_each(|&id| w.u64(id as u64));
    w.matrix(&m.word_vectors);
    w.matrix(&m.doc_vectors);
    w.matrix(&m.output_vectors);
    Ok(w.buf)
}

fn decode_doc2vec(buf: &[u8]) -> Result<Doc2VecModel<f64>> {
    let mut r = Reader::new(buf, "doc2vec");
    let config: Doc2VecConfig = serde_json::from_str(&r.str()?)?;
    let v = r.usize()?;
    let entries = (0..v).map(|_| Ok((r.str()?, r.u64()?))).collect::<Result<Vec<_>>>()?;
    let vocab = Vocabulary::from_counts(entries);
    let n = r.usize()?;
    let ids = (0..n).map(|_| Ok(r.u64()? as i64)).collect::<Result<Vec<_>>>()?;
    let (wv, dv, ov) = (r.matrix()?, r.matrix()?, r.matrix()?);
    r.finish()?;
    Doc2VecModel::from_parts(vocab, config, ids, wv, dv, ov)
}

fn encode_mlp(w: &mut Writer, m: &Mlp<f64>) {
    w.usize(m.layers.len());
    m.layers.iter().for_each(|d| w.dense(d));
}

fn decode_mlp(r: &mut Reader<'_>) -> Result<Mlp<f64>> {
    let n = r.usize()?;
    Ok(Mlp { layers: (0..n).map(|_| r.dense()).collect::<Result<_>>()? })
}

fn encode_base(m: &TrainedBaseModel<f64>) -> Vec<u8> {
    let mut w = Writer::default();
    w.usize(m.kind().column());
    match m {
        TrainedBaseModel::BiLstm(b) => {
            w.usize(b.max_seq_len);
            w.usize(b.net.layers.len());
            for l in &b.net.layers {
                w.lstm(&l.fwd);
                w.lstm(&l.bwd);
            }
            w.dense(&b.net.dense);
            w.dense(&b.net.out);
        }
        TrainedBaseModel::LogReg(l) => {
            w.usize(l.iterations);
            w.f64s(&l.weights);
            w.f64(l.bias);
        }
        TrainedBaseModel::Svm(s) => {
            w.matrix(&s.support);
            w.f64s(&s.coef);
            w.f64(s.bias);
            w.f64(s.gamma);
            w.f64(s.platt.a);
            w.f64(s.platt.b);
        }
        TrainedBaseModel::RandomForest(f) => {
            w.usize(f.n_features);
            w.usize(f.trees.len());
            for t in &f.trees {
                w.usize(t.nodes.len());
                for n in &t.nodes {
                    match *n {
                        Node::Leaf { label } => {
                            w.u64(0);
                            w.u64(label as u64);
                        }
                        Node::Split { feature, threshold, left, right } => {
                            w.u64(1);
                            w.usize(feature);
                            w.f64(threshold);
                            w.usize(left);
                            w.usize(right);
                        }
                    }
                }
            }
        }
        TrainedBaseModel::NaiveBayes(m) => {
            w.f64s(&m.scaler.min);
            w.f64s(&m.scaler.max);
            w.matrix(&m.nb.log_theta);
        }
    }
    w.buf
}

fn decode_base(buf: &[u8], name: &str) -> Result<TrainedBaseModel<f64>> {
    let mut r = Reader::new(buf, name);
    let col = r.usize()?;
    let kind = *BaseModelKind::ALL.get(col).ok_or_else(|| r.bad("unknown model kind"))?;
    let model = match kind {
        BaseModelKind::BiLstm => {
            let max_seq_len = r.usize()?;
            let n = r.usize()?;
            let layers = (0..n).map(|_| Ok(BiLstmLayer { fwd: r.lstm()?, bwd: r.lstm()? })).collect::<Result<_>>()?;
            let net = BiLstmNet { layers, dense: r.dense()?, out: r.dense()? };
            TrainedBaseModel::BiLstm(BiLstmModel { net, max_seq_len })
        }
        BaseModelKind::LogReg => {
            let iterations = r.usize()?;
            TrainedBaseModel::LogReg(LogRegModel { iterations, weights: r.f64s()?, bias: r.f64()? })
        }
        BaseModelKind::Svm => TrainedBaseModel::Svm(SvmModel {
            support: r.matrix()?,
            coef: r.f64s()?,
            bias: r.f64()?,
            gamma: r.f64()?,
            platt: PlattScaling { a: r.f64()?, b: r.f64()? },
        }),
        BaseModelKind::RandomForest => {
            let n_features = r.usize()?;
            let n = r.usize()?;
            let mut trees = Vec::with_capacity(n);
            for _ in 0..n {
                let k = r.usize()?;
                let mut nodes = Vec::with_capacity(k);
                for _ in 0..k {
                    nodes.push(match r.u64()? {
                        0 => Node::Leaf { label: (r.u64()? == 1) as u8 },
                        1 => Node::Split { feature: r.usize()?, threshold: r.f64()?, left: r.usize()?, right: r.usize()? },
                        _ => return Err(r.bad("bad node tag")),
                    });
                }
                let bad_link = nodes.iter().any(|n| match *n {
                    Node::Split { feature, left, right, .. } => feature >= n_features || left >= k || right >= k,
                    Node::Leaf { .. } => false,
                });
                if bad_link || nodes.is_empty() {
                    return Err(r.bad("inconsistent tree"));
                }
                trees.push(Tree { nodes });
            }
            TrainedBaseModel::RandomForest(Forest { trees, n_features })
        }
        BaseModelKind::NaiveBayes => TrainedBaseModel::NaiveBayes(MnbModel {
            scaler: MinMaxScaler { min: r.f64s()?, max: r.f64s()? },
            nb: MultinomialNb { log_theta: r.matrix()? },
        }),
    };
    r.finish()?;
    Ok(model)
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn component_name(kind: BaseModelKind) -> String {
    format!("base.{}", kind.name())
}

impl ModelBundle {
    fn components(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out = vec![
            ("config".to_string(), self.config.canonical_json()?.into_bytes()),
            ("doc2vec".to_string(), encode_doc2vec(&self.pipeline.doc2vec)?),
        ];
        for m in &self.pipeline.stack.bases {
            out.push((component_name(m.kind()), encode_base(m)));
        }
        let mut w = Writer::default();
        w.u64(self.pipeline.infer_seed);
        encode_mlp(&mut w, &self.pipeline.stack.meta);
        out.push(("meta".to_string(), w.buf));
        Ok(out)
    }

    pub fn to_bytes(&self, created_at: &str) -> Result<Vec<u8>> {
        let comps = self.components()?;
        let mut entries = Vec::new();
        let mut offset = 0u64;
        for (name, blob) in &comps {
            entries.push(ComponentEntry { name: name.clone(), offset, length: blob.len() as u64, sha256: sha(blob) });
            offset += blob.len() as u64;
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            created_at: created_at.to_string(),
            config_digest: self.config.digest()?,
            column_order: BaseModelKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            components: entries,
        };
        let manifest = serde_json::to_string(&serde_json::to_value(&manifest)?)?;
        let mut out = Vec::with_capacity(16 + manifest.len() + offset as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(manifest.as_bytes());
        for (_, blob) in &comps {
            out.extend_from_slice(blob);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (manifest, blobs) = split_bundle(bytes)?;
        let get = |name: &str| -> Result<&[u8]> {
            let e = manifest
                .components
                .iter()
                .find(|c| c.name == name)
                .ok_or_else(|| Error::Bundle(format!("missing component `{name}`")))?;
            let start = usize::try_from(e.offset).map_err(|_| Error::Bundle("offset overflow".into()))?;
            let end = start.checked_add(e.length as usize).filter(|&end| end <= blobs.len());
            let blob = &blobs[start..end.ok_or_else(|| Error::Bundle(format!("component `{name}` out of range")))?];
            if sha(blob) != e.sha256 {
                return Err(Error::Checksum(name.to_string()));
            }
            Ok(blob)
        };
        // verify every checksum before decoding anything
        for c in &manifest.components {
            get(&c.name)?;
        }
        let config_text = std::str::from_utf8(get("config")?).map_err(|_| Error::Bundle("config is not utf-8".into()))?;
        let config = RunConfig::from_json(config_text)?;
        if config.digest()? != manifest.config_digest {
            return Err(Error::Bundle("config digest does not match the manifest".into()));
        }
        let doc2vec = decode_doc2vec(get("doc2vec")?)?;
        let bases = BaseModelKind::ALL
            .iter()
            .map(|&k| {
                let name = component_name(k);
                let m = decode_base(get(&name)?, &name)?;
                if m.kind() != k {
                    return Err(Error::Bundle(format!("component `{name}` holds a {} model", m.kind())));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut r = Reader::new(get("meta")?, "meta");
        let infer_seed = r.u64()?;
        let meta = decode_mlp(&mut r)?;
        r.finish()?;
        Ok(Self { config, pipeline: Pipeline { doc2vec, stack: StackingModel { bases, meta }, infer_seed } })
    }

    pub fn save(&self, path: &Path, created_at: &str) -> Result<()> {
        let bytes = self.to_bytes(created_at)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Parse the header and manifest; returns the manifest and the blob section.
pub fn split_bundle(bytes: &[u8]) -> Result<(Manifest, &[u8])> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Bundle("not a model bundle (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Bundle(format!("unsupported format version {version}")));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let end = 16usize.checked_add(len).filter(|&e| e <= bytes.len()).ok_or_else(|| Error::Bundle("truncated manifest".into()))?;
    let manifest: Manifest = serde_json::from_slice(&bytes[16..end]).map_err(|e| Error::Bundle(format!("manifest: {e}")))?;
    if manifest.format_version != version {
        return Err(Error::Bundle("manifest and header versions differ".into()));
    }
    Ok((manifest, &bytes[end..]))
}
