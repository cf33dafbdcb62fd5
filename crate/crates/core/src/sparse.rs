//! Okapi BM25 over an inverted index of chunk tokens.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Chunk;
use crate::snapshot;
use crate::tokenize::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidConfig(format!("bm25 k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!("bm25 b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, never negative.
    pub fn idf(&self, doc_count: usize, doc_freq: usize) -> f64 {
        let n = doc_count as f64;
        let df = doc_freq as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn term_weight(&self, tf: u32, doc_len: usize, avg_doc_length: f64) -> f64 {
        let tf = tf as f64;
        let norm = 1.0 - self.b + self.b * (doc_len as f64 / avg_doc_length);
        tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub chunk_id: String,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub params: Bm25Params,
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lengths: BTreeMap<String, usize>,
    pub avg_doc_length: f64,
    pub doc_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub score: f64,
}

pub fn build_sparse(chunks: &[Chunk]) -> Result<InvertedIndex> {
    build_sparse_with(chunks, Bm25Params::default())
}

pub fn build_sparse_with(chunks: &[Chunk], params: Bm25Params) -> Result<InvertedIndex> {
    params.validate()?;
    if chunks.is_empty() {
        return Err(Error::InvalidConfig("cannot index an empty chunk set".into()));
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = BTreeMap::new();
    for chunk in chunks {
        if doc_lengths.contains_key(&chunk.chunk_id) {
            return Err(Error::DuplicateChunk(chunk.chunk_id.clone()));
        }
        let tokens = tokenize(&chunk.text);
        doc_lengths.insert(chunk.chunk_id.clone(), tokens.len());
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        for (term, tf) in counts {
            postings.entry(term).or_default().push(Posting {
                chunk_id: chunk.chunk_id.clone(),
                tf,
            });
        }
    }
    let doc_count = doc_lengths.len();
    let total: usize = doc_lengths.values().sum();
    Ok(InvertedIndex {
        params,
        postings,
        doc_lengths,
        avg_doc_length: total as f64 / doc_count as f64,
        doc_count,
    })
}

/// Distinct query terms in first-occurrence order.
pub fn query_terms(query: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    tokenize(query)
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// BM25 top-`n_sparse`, descending score, ties by ascending chunk id.
/// Chunks sharing no term with the query are never returned.
pub fn search_sparse(index: &InvertedIndex, query: &str, n_sparse: usize) -> Result<Vec<ScoredChunk>> {
    if n_sparse < 1 {
        return Err(Error::InvalidTopK);
    }
    let params = &index.params;
    let mut scores: HashMap<&str, f64> = HashMap::new();
    for term in query_terms(query) {
        let Some(list) = index.postings.get(&term) else {
            continue;
        };
        let idf = params.idf(index.doc_count, list.len());
        for p in list {
            let len = index.doc_lengths[&p.chunk_id];
            *scores.entry(p.chunk_id.as_str()).or_insert(0.0) +=
                idf * params.term_weight(p.tf, len, index.avg_doc_length);
        }
    }
    let mut ranked: Vec<ScoredChunk> = scores
        .into_iter()
        .map(|(id, score)| ScoredChunk {
            chunk_id: id.to_string(),
            score,
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked.truncate(n_sparse);
    Ok(ranked)
}

pub(crate) fn sort_ranked(ranked: &mut [ScoredChunk]) {
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
}

impl InvertedIndex {
    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        snapshot::write(path, snapshot::SPARSE_KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let index: Self = snapshot::read(path, snapshot::SPARSE_KIND)?;
        index.params.validate()?;
        Ok(index)
    }
}
