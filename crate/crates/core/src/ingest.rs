//! Document loading and positional chunking.
//!
//! Documents are read from plain text, markdown, JSON, CSV or TSV files and
//! normalized to LF line endings. Structured formats are flattened into
//! `key: value` lines, one record per paragraph. Chunks are fixed-width
//! windows measured in Unicode scalar values.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    PlainText,
    Markdown,
    Json,
    Csv,
    Tsv,
}

impl DocFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "txt" | "text" => Some(DocFormat::PlainText),
            "md" | "markdown" => Some(DocFormat::Markdown),
            "json" => Some(DocFormat::Json),
            "csv" => Some(DocFormat::Csv),
            "tsv" | "tab" => Some(DocFormat::Tsv),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DocFormat::PlainText => "plain_text",
            DocFormat::Markdown => "markdown",
            DocFormat::Json => "json",
            DocFormat::Csv => "csv",
            DocFormat::Tsv => "tsv",
        }
    }
}

impl fmt::Display for DocFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain_text" | "text" | "txt" => Ok(DocFormat::PlainText),
            "markdown" | "md" => Ok(DocFormat::Markdown),
            "json" => Ok(DocFormat::Json),
            "csv" => Ok(DocFormat::Csv),
            "tsv" => Ok(DocFormat::Tsv),
            other => Err(Error::UnknownVariant {
                kind: "document format",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    pub uri: String,
    pub format: DocFormat,
    pub body: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub ordinal: usize,
    pub text: String,
    /// Offsets into the normalized body, in Unicode scalar values.
    pub char_start: usize,
    pub char_end: usize,
}

impl Chunk {
    pub fn make_id(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}#{ordinal:04}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkingConfig {
    pub chunk_size: usize,
    pub chunk_overlap: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self {
            chunk_size: 2048,
            chunk_overlap: 256,
        }
    }
}

impl ChunkingConfig {
    pub fn new(chunk_size: usize, chunk_overlap: usize) -> Result<Self> {
        let cfg = Self {
            chunk_size,
            chunk_overlap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be positive".into()));
        }
        if self.chunk_overlap >= self.chunk_size {
            return Err(Error::InvalidConfig(format!(
                "chunk_overlap ({}) must be smaller than chunk_size ({})",
                self.chunk_overlap, self.chunk_size
            )));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.chunk_size - self.chunk_overlap
    }
}

/// Loads a document, using the file stem as its id.
pub fn load_document(uri: &str, format_override: Option<DocFormat>) -> Result<SourceDocument> {
    let doc_id = Path::new(uri)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(uri)
        .to_string();
    load_document_as(uri, &doc_id, format_override)
}

pub fn load_document_as(
    uri: &str,
    doc_id: &str,
    format_override: Option<DocFormat>,
) -> Result<SourceDocument> {
    let path = Path::new(uri);
    let format = match format_override {
        Some(f) => f,
        None => DocFormat::from_path(path).ok_or_else(|| Error::UnsupportedFormat(uri.into()))?,
    };
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;

    let mut metadata = BTreeMap::new();
    let text = match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{uri}: invalid UTF-8 replaced with U+FFFD");
            metadata.insert("utf8_replaced".to_string(), "true".to_string());
            String::from_utf8_lossy(e.as_bytes()).into_owned()
        }
    };
    let text = normalize_newlines(text.strip_prefix('\u{feff}').unwrap_or(&text));

    let body = match format {
        DocFormat::PlainText | DocFormat::Markdown => text,
        DocFormat::Json => flatten_json(uri, &text)?,
        DocFormat::Csv => flatten_delimited(uri, &text, b',', "csv")?,
        DocFormat::Tsv => flatten_delimited(uri, &text, b'\t', "tsv")?,
    };
    if body.trim().is_empty() {
        return Err(Error::EmptyDocument(uri.into()));
    }

    Ok(SourceDocument {
        doc_id: doc_id.to_string(),
        uri: uri.to_string(),
        format,
        body,
        metadata,
    })
}

fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

fn flatten_json(uri: &str, text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        uri: uri.into(),
        format: "json",
        message: e.to_string(),
    })?;
    let records: Vec<&serde_json::Value> = match &value {
        serde_json::Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let paragraphs: Vec<String> = records
        .into_iter()
        .map(|record| {
            let mut lines = Vec::new();
            flatten_value("", record, &mut lines);
            lines.join("\n")
        })
        .filter(|p| !p.is_empty())
        .collect();
    Ok(paragraphs.join("\n\n"))
}

fn flatten_value(prefix: &str, value: &serde_json::Value, out: &mut Vec<String>) {
    use serde_json::Value;
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_value(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_value(&key(&i.to_string()), v, out);
            }
        }
        scalar => {
            let rendered = match scalar {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            };
            if prefix.is_empty() {
                out.push(rendered);
            } else {
                out.push(format!("{prefix}: {rendered}"));
            }
        }
    }
}

fn flatten_delimited(uri: &str, text: &str, delimiter: u8, format: &'static str) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| Error::Parse {
        uri: uri.into(),
        format,
        message: e.to_string(),
    };
    let headers = reader.headers().map_err(parse_err)?.clone();
    let mut paragraphs = Vec::new();
    for row in reader.records() {
        let row = row.map_err(parse_err)?;
        let lines: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, field)| match headers.get(i) {
                Some(h) => format!("{h}: {field}"),
                None => format!("column_{i}: {field}"),
            })
            .collect();
        if !lines.is_empty() {
            paragraphs.push(lines.join("\n"));
        }
    }
    Ok(paragraphs.join("\n\n"))
}

/// Splits a document into windows of `chunk_size` scalar values advancing by
/// `chunk_size - chunk_overlap`. The final window may be shorter.
pub fn chunk_document(doc: &SourceDocument, cfg: &ChunkingConfig) -> Vec<Chunk> {
    let chars: Vec<char> = doc.body.chars().collect();
    let len = chars.len();
    let stride = cfg.stride();
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + cfg.chunk_size).min(len);
        let ordinal = chunks.len();
        chunks.push(Chunk {
            chunk_id: Chunk::make_id(&doc.doc_id, ordinal),
            doc_id: doc.doc_id.clone(),
            ordinal,
            text: chars[start..end].iter().collect(),
            char_start: start,
            char_end: end,
        });
        if end == len {
            break;
        }
        start += stride;
    }
    chunks
}

/// One line of a corpus manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DocFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl ManifestEntry {
    pub fn new(uri: impl Into<String>) -> Self {
        Self {
            uri: uri.into(),
            format: None,
            doc_id: None,
        }
    }
}

/// Reads a manifest; relative uris are resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            uri: path.display().to_string(),
            format: "manifest",
            message: e.to_string(),
        })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    for entry in &mut entries {
        let p = PathBuf::from(&entry.uri);
        if p.is_relative() {
            entry.uri = base.join(p).to_string_lossy().into_owned();
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub documents: Vec<SourceDocument>,
    pub chunks: Vec<Chunk>,
    /// One message per document that failed to load.
    pub warnings: Vec<String>,
}

pub fn ingest_corpus(uris: &[String], cfg: &ChunkingConfig) -> Result<IngestOutcome> {
    let entries: Vec<ManifestEntry> = uris.iter().map(ManifestEntry::new).collect();
    ingest_manifest(&entries, cfg)
}

pub fn ingest_manifest(entries: &[ManifestEntry], cfg: &ChunkingConfig) -> Result<IngestOutcome> {
    cfg.validate()?;
    if entries.is_empty() {
        return Err(Error::InvalidConfig("corpus has no documents".into()));
    }
    let mut outcome = IngestOutcome::default();
    let mut seen = HashSet::new();
    for entry in entries {
        let loaded = match &entry.doc_id {
            Some(id) => load_document_as(&entry.uri, id, entry.format),
            None => load_document(&entry.uri, entry.format),
        };
        let doc = match loaded {
            Ok(doc) if !seen.insert(doc.doc_id.clone()) => {
                let msg = format!("{}: duplicate doc_id {}", entry.uri, doc.doc_id);
                log::warn!("{msg}");
                outcome.warnings.push(msg);
                continue;
            }
            Ok(doc) => doc,
            Err(e) => {
                let msg = e.to_string();
                log::warn!("{msg}");
                outcome.warnings.push(msg);
                continue;
            }
        };
        outcome.chunks.extend(chunk_document(&doc, cfg));
        outcome.documents.push(doc);
    }
    if outcome.documents.is_empty() {
        return Err(Error::AllDocumentsFailed(outcome.warnings));
    }
    Ok(outcome)
}

pub fn write_chunks_jsonl<W: Write>(mut out: W, chunks: &[Chunk]) -> std::io::Result<()> {
    for chunk in chunks {
        serde_json::to_writer(&mut out, chunk)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_chunks_jsonl<R: BufRead>(input: R) -> Result<Vec<Chunk>> {
    let mut chunks = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Snapshot(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let chunk = serde_json::from_str(&line)
            .map_err(|e| Error::Snapshot(format!("chunk line {}: {e}", n + 1)))?;
        chunks.push(chunk);
    }
    Ok(chunks)
}
