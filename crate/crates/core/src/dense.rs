//! Exact cosine-similarity search over unit-normalized chunk embeddings.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::{post_json, RetryPolicy};
use crate::ingest::Chunk;
use crate::snapshot;
use crate::sparse::{sort_ranked, ScoredChunk};
use crate::tokenize::tokenize;

pub type Embedding = Vec<f64>;

const EMBED_BATCH: usize = 64;

/// Anything that turns text into fixed-width vectors. The same provider must
/// serve both ingestion and querying of an index.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>>;
}

/// Deterministic bag-of-hashed-tokens embedder for offline use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dimension: usize,
}

pub const HASH_EMBEDDER_NAME: &str = "hash-bow-v1";

pub fn test_embedder(dimension: usize) -> Result<HashEmbedder> {
    HashEmbedder::new(dimension)
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidConfig(format!(
                "hash embedder dimension must be >= 2, got {dimension}"
            )));
        }
        Ok(Self { dimension })
    }

    /// Bucket a (lowercased) token lands in.
    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.dimension as u64) as usize
    }

    fn embed_one(&self, text: &str) -> Embedding {
        let mut v = vec![0.0; self.dimension];
        for t in tokenize(text) {
            v[self.bucket(&t)] += 1.0;
        }
        normalize(&mut v);
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        HASH_EMBEDDER_NAME
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Scales to unit L2 norm in place; returns false for a zero vector.
pub fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Remote embedder: `POST {"texts": [...]}` returning `{"vectors": [[...]]}`.
pub struct HttpEmbedder {
    name: String,
    endpoint: String,
    dimension: usize,
    token: Option<String>,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl HttpEmbedder {
    pub fn new(
        name: impl Into<String>,
        endpoint: impl Into<String>,
        dimension: usize,
        token: Option<String>,
        timeout: Duration,
        retries: u32,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(Self {
            name: name.into(),
            endpoint: endpoint.into(),
            dimension,
            token,
            retry: RetryPolicy { retries },
            client,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        let resp: EmbedResponse = post_json(
            &self.client,
            &self.endpoint,
            self.token.as_deref(),
            &EmbedRequest { texts },
            self.retry,
        )
        .map_err(|(attempts, msg)| Error::Provider(format!("{msg} (after {attempts} attempt(s))")))?;
        Ok(resp.vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseIndex {
    pub provider_name: String,
    pub dimension: usize,
    pub ids: Vec<String>,
    /// One unit-norm row per chunk, in `ids` order.
    pub matrix: Vec<Embedding>,
}

fn embed_checked(provider: &dyn EmbeddingProvider, texts: &[&str]) -> Result<Vec<Embedding>> {
    let vectors = provider.embed(texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Provider(format!(
            "provider {} returned {} vectors for {} inputs",
            provider.name(),
            vectors.len(),
            texts.len()
        )));
    }
    for v in &vectors {
        if v.len() != provider.dimension() {
            return Err(Error::Provider(format!(
                "dimension mismatch: provider {} declared {}, returned {}",
                provider.name(),
                provider.dimension(),
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Provider(format!(
                "provider {} returned a non-finite value",
                provider.name()
            )));
        }
    }
    Ok(vectors)
}

pub fn build_dense(chunks: &[Chunk], provider: &dyn EmbeddingProvider) -> Result<DenseIndex> {
    if chunks.is_empty() {
        return Err(Error::InvalidConfig("cannot index an empty chunk set".into()));
    }
    let dimension = provider.dimension();
    if dimension == 0 {
        return Err(Error::Provider(format!("provider {} has zero dimension", provider.name())));
    }
    let mut seen = HashMap::with_capacity(chunks.len());
    for c in chunks {
        if seen.insert(c.chunk_id.as_str(), ()).is_some() {
            return Err(Error::DuplicateChunk(c.chunk_id.clone()));
        }
    }

    let mut matrix = Vec::with_capacity(chunks.len());
    for batch in chunks.chunks(EMBED_BATCH) {
        let texts: Vec<&str> = batch.iter().map(|c| c.text.as_str()).collect();
        for (mut v, chunk) in embed_checked(provider, &texts)?.into_iter().zip(batch) {
            if !normalize(&mut v) {
                log::warn!("{}: zero embedding replaced by unit basis vector", chunk.chunk_id);
                v[0] = 1.0;
            }
            matrix.push(v);
        }
    }
    Ok(DenseIndex {
        provider_name: provider.name().to_string(),
        dimension,
        ids: chunks.iter().map(|c| c.chunk_id.clone()).collect(),
        matrix,
    })
}

pub fn search_dense(
    index: &DenseIndex,
    query: &str,
    provider: &dyn EmbeddingProvider,
    n_dense: usize,
) -> Result<Vec<ScoredChunk>> {
    if n_dense < 1 {
        return Err(Error::InvalidTopK);
    }
    if provider.name() != index.provider_name || provider.dimension() != index.dimension {
        return Err(Error::ProviderMismatch {
            expected: format!("{}/{}", index.provider_name, index.dimension),
            actual: format!("{}/{}", provider.name(), provider.dimension()),
        });
    }
    let mut q = embed_checked(provider, &[query])?.remove(0);
    normalize(&mut q);
    let mut ranked: Vec<ScoredChunk> = index
        .ids
        .iter()
        .zip(&index.matrix)
        .map(|(id, row)| ScoredChunk {
            chunk_id: id.clone(),
            score: dot(row, &q),
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked.truncate(n_dense);
    Ok(ranked)
}

impl DenseIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        snapshot::write(path, snapshot::DENSE_KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let index: Self = snapshot::read(path, snapshot::DENSE_KIND)?;
        if index.ids.len() != index.matrix.len()
            || index.matrix.iter().any(|r| r.len() != index.dimension)
        {
            return Err(Error::Snapshot(format!("{}: inconsistent dense matrix shape", path.display())));
        }
        Ok(index)
    }
}
