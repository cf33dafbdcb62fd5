//! Paired sparse and dense indexes over one chunk set, plus the chunk store
//! they refer to.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::dense::{build_dense, DenseIndex, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::ingest::{read_chunks_jsonl, write_chunks_jsonl, Chunk, IngestOutcome};
use crate::sparse::{build_sparse_with, Bm25Params, InvertedIndex};

pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const DOCUMENTS_FILE: &str = "documents.json";
pub const SPARSE_FILE: &str = "sparse.json";
pub const DENSE_FILE: &str = "dense.json";

#[derive(Debug, Clone, PartialEq)]
pub struct HybridIndex {
    pub chunks: Vec<Chunk>,
    /// doc_id -> source uri
    pub documents: BTreeMap<String, String>,
    pub sparse: Option<InvertedIndex>,
    pub dense: Option<DenseIndex>,
    by_id: HashMap<String, usize>,
}

impl HybridIndex {
    pub fn new(
        chunks: Vec<Chunk>,
        documents: BTreeMap<String, String>,
        sparse: Option<InvertedIndex>,
        dense: Option<DenseIndex>,
    ) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(chunks.len());
        for (i, c) in chunks.iter().enumerate() {
            if by_id.insert(c.chunk_id.clone(), i).is_some() {
                return Err(Error::DuplicateChunk(c.chunk_id.clone()));
            }
        }
        Ok(Self {
            chunks,
            documents,
            sparse,
            dense,
            by_id,
        })
    }

    /// Builds both indexes over the ingested chunks.
    pub fn build(
        outcome: &IngestOutcome,
        params: Bm25Params,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Self> {
        let sparse = build_sparse_with(&outcome.chunks, params)?;
        let dense = build_dense(&outcome.chunks, provider)?;
        let documents = outcome
            .documents
            .iter()
            .map(|d| (d.doc_id.clone(), d.uri.clone()))
            .collect();
        Self::new(outcome.chunks.clone(), documents, Some(sparse), Some(dense))
    }

    pub fn chunk(&self, id: &str) -> Option<&Chunk> {
        self.by_id.get(id).map(|&i| &self.chunks[i])
    }

    pub fn uri_of(&self, doc_id: &str) -> Option<&str> {
        self.documents.get(doc_id).map(String::as_str)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let chunks_path = dir.join(CHUNKS_FILE);
        let file = File::create(&chunks_path).map_err(|e| Error::io(&chunks_path, e))?;
        write_chunks_jsonl(BufWriter::new(file), &self.chunks).map_err(|e| Error::io(&chunks_path, e))?;

        let docs_path = dir.join(DOCUMENTS_FILE);
        let text = serde_json::to_string_pretty(&self.documents).map_err(|e| Error::Snapshot(e.to_string()))?;
        std::fs::write(&docs_path, text + "\n").map_err(|e| Error::io(&docs_path, e))?;

        if let Some(sparse) = &self.sparse {
            sparse.save(&dir.join(SPARSE_FILE))?;
        }
        if let Some(dense) = &self.dense {
            dense.save(&dir.join(DENSE_FILE))?;
        }
        Ok(())
    }

    /// Loads a saved index directory. Missing sparse or dense snapshots are
    /// tolerated; retrieval modes that need them will fail.
    pub fn load(dir: &Path) -> Result<Self> {
        let chunks_path = dir.join(CHUNKS_FILE);
        let file = File::open(&chunks_path).map_err(|e| Error::io(&chunks_path, e))?;
        let chunks = read_chunks_jsonl(BufReader::new(file))?;

        let docs_path = dir.join(DOCUMENTS_FILE);
        let documents = match std::fs::read_to_string(&docs_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Snapshot(format!("{}: {e}", docs_path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(Error::io(&docs_path, e)),
        };

        let sparse_path = dir.join(SPARSE_FILE);
        let sparse = sparse_path.exists().then(|| InvertedIndex::load(&sparse_path)).transpose()?;
        let dense_path = dir.join(DENSE_FILE);
        let dense = dense_path.exists().then(|| DenseIndex::load(&dense_path)).transpose()?;
        if sparse.is_none() && dense.is_none() {
            return Err(Error::Snapshot(format!("{}: no index snapshots found", dir.display())));
        }
        Self::new(chunks, documents, sparse, dense)
    }
}
