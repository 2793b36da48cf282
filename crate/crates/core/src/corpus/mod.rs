//! Dataset ingestion and the four-step text normalization pipeline
//! (tokenize, drop noise, lowercase, stem).

mod porter;
mod stopwords;
pub mod synthetic;
mod tokenize;

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

pub use porter::porter_stem;
pub use stopwords::{english_list_checksum, StopwordList, ENGLISH_SHA256};
pub use synthetic::SyntheticSpec;
pub use tokenize::{normalize, tokenize};

use crate::error::{Error, Result};

/// Label 1 marks an unreliable (fake) item, 0 a reliable (real) one.
pub const FAKE: u8 = 1;
pub const REAL: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: i64,
    pub title: Option<String>,
    pub author: Option<String>,
    pub body: Option<String>,
    pub label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: i64,
    pub tokens: Vec<String>,
    pub label: Option<u8>,
}

impl Document {
    pub fn new(id: i64, tokens: Vec<String>, label: Option<u8>) -> Self {
        Self { id, tokens, label }
    }
}

/// Per-attribute presence counts of a loaded dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub records: usize,
    pub title: usize,
    pub author: usize,
    pub text: usize,
    pub label: usize,
    pub fake: usize,
    pub real: usize,
}

impl DatasetStats {
    pub fn of(records: &[RawRecord]) -> Self {
        let mut s = DatasetStats { records: records.len(), ..Default::default() };
        for r in records {
            s.title += r.title.is_some() as usize;
            s.author += r.author.is_some() as usize;
            s.text += r.body.is_some() as usize;
            match r.label {
                Some(FAKE) => {
                    s.label += 1;
                    s.fake += 1
                }
                Some(_) => {
                    s.label += 1;
                    s.real += 1
                }
                None => {}
            }
        }
        s
    }
}

fn quotes_balanced(bytes: &[u8]) -> bool {
    bytes.iter().filter(|&&b| b == b'"').count() % 2 == 0
}

fn cell(record: &csv::StringRecord, idx: Option<usize>) -> Option<String> {
    idx.and_then(|i| record.get(i)).filter(|s| !s.is_empty()).map(str::to_string)
}

/// Parse a CSV with header `id,title,author,text[,label]`.
pub fn load_dataset(path: impl AsRef<Path>, expect_labels: bool) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&bytes, expect_labels)
}

pub fn parse_dataset(bytes: &[u8], expect_labels: bool) -> Result<Vec<RawRecord>> {
    if !quotes_balanced(bytes) {
        return Err(Error::MalformedCsv { record: 0, reason: "unbalanced quotes".into() });
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedCsv { record: 0, reason: e.to_string() })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let mut required = vec!["id", "title", "author", "text"];
    if expect_labels {
        required.push("label");
    }
    for name in &required {
        if column(name).is_none() {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let (id_col, title_col, author_col, text_col, label_col) =
        (column("id"), column("title"), column("author"), column("text"), column("label"));

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::MalformedCsv { record: n + 1, reason: e.to_string() })?;
        let raw_id = cell(&row, id_col).unwrap_or_default();
        let id: i64 = raw_id
            .trim()
            .parse()
            .map_err(|_| Error::MalformedCsv { record: n + 1, reason: format!("bad id `{raw_id}`") })?;
        if !seen.insert(id) {
            return Err(Error::MalformedCsv { record: n + 1, reason: format!("duplicate id {id}") });
        }
        let label = match cell(&row, label_col) {
            Some(v) => match v.trim() {
                "0" => Some(REAL),
                "1" => Some(FAKE),
                _ => return Err(Error::BadLabel { id: raw_id, value: v }),
            },
            None if expect_labels => return Err(Error::BadLabel { id: raw_id, value: String::new() }),
            None => None,
        };
        out.push(RawRecord {
            id,
            title: cell(&row, title_col),
            author: cell(&row, author_col),
            body: cell(&row, text_col),
            label,
        });
    }
    Ok(out)
}

/// Tokenize, normalize and stem a bare string.
pub fn preprocess_text(text: &str, stopwords: &StopwordList) -> Vec<String> {
    normalize(&tokenize(text), stopwords).iter().map(|t| porter_stem(t)).collect()
}

/// Title and body are concatenated; the author field is not used.
pub fn preprocess(record: &RawRecord, stopwords: &StopwordList) -> Result<Document> {
    let body = record.body.as_deref().ok_or(Error::MissingText(record.id))?;
    let text = match &record.title {
        Some(title) => format!("{title} {body}"),
        None => body.to_string(),
    };
    Ok(Document { id: record.id, tokens: preprocess_text(&text, stopwords), label: record.label })
}

/// Preprocess every record, dropping those without a body. Returns the
/// documents and the ids that were dropped.
pub fn preprocess_all(records: &[RawRecord], stopwords: &StopwordList) -> (Vec<Document>, Vec<i64>) {
    let mut docs = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for r in records {
        match preprocess(r, stopwords) {
            Ok(d) => docs.push(d),
            Err(_) => dropped.push(r.id),
        }
    }
    (docs, dropped)
}

/// One cache line: `id<TAB>label<TAB>tokens` with `-` for a missing label.
pub fn format_cache_line(doc: &Document) -> String {
    let label = doc.label.map_or_else(|| "-".to_string(), |l| l.to_string());
    format!("{}\t{}\t{}", doc.id, label, doc.tokens.join(" "))
}

pub fn parse_cache_line(line: &str) -> Result<Document> {
    let bad = |why: &str| Error::MalformedCsv { record: 0, reason: format!("cache line: {why}: `{line}`") };
    let mut parts = line.splitn(3, '\t');
    let id: i64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("id"))?;
    let label = match parts.next().ok_or_else(|| bad("label"))? {
        "-" => None,
        "0" => Some(REAL),
        "1" => Some(FAKE),
        other => return Err(Error::BadLabel { id: id.to_string(), value: other.into() }),
    };
    let tokens = parts.next().ok_or_else(|| bad("tokens"))?.split_whitespace().map(str::to_string).collect();
    Ok(Document { id, tokens, label })
}

pub fn write_cache(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for d in docs {
        writeln!(w, "{}", format_cache_line(d)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.is_empty() {
            docs.push(parse_cache_line(&line)?);
        }
    }
    Ok(docs)
}
