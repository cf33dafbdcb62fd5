//! Reciprocal rank fusion of the sparse and dense candidate lists.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::{search_dense, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::index::HybridIndex;
use crate::ingest::Chunk;
use crate::sparse::search_sparse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub n_dense: usize,
    pub n_sparse: usize,
    pub n_hybrid: usize,
    pub rrf_k: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            n_dense: 3,
            n_sparse: 3,
            n_hybrid: 3,
            rrf_k: 60.0,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_dense < 1 || self.n_sparse < 1 || self.n_hybrid < 1 {
            return Err(Error::InvalidConfig(
                "n_dense, n_sparse and n_hybrid must all be >= 1".into(),
            ));
        }
        if !(self.rrf_k > 0.0 && self.rrf_k.is_finite()) {
            return Err(Error::InvalidConfig(format!("rrf_k must be > 0, got {}", self.rrf_k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub chunk_id: String,
    /// 1-based position in the dense list, if present there.
    pub dense_rank: Option<usize>,
    /// 1-based position in the sparse list, if present there.
    pub sparse_rank: Option<usize>,
    pub rrf_score: f64,
}

pub fn rrf_contribution(k: f64, rank: usize) -> f64 {
    1.0 / (k + rank as f64)
}

fn ranks<S: AsRef<str>>(list: &[S]) -> Result<HashMap<&str, usize>> {
    let mut out = HashMap::with_capacity(list.len());
    for (i, id) in list.iter().enumerate() {
        if out.insert(id.as_ref(), i + 1).is_some() {
            return Err(Error::DuplicateCandidate(id.as_ref().to_string()));
        }
    }
    Ok(out)
}

/// Fuses two ranked id lists. The candidate set is their union; a list a
/// candidate is absent from contributes nothing. Output is sorted by
/// descending score, ties by ascending id, and cut to `n_hybrid`.
pub fn rrf_fuse<S: AsRef<str>>(dense: &[S], sparse: &[S], cfg: &RetrievalConfig) -> Result<Vec<RankedCandidate>> {
    let dense_ranks = ranks(dense)?;
    let sparse_ranks = ranks(sparse)?;
    let ids: HashSet<&str> = dense_ranks.keys().chain(sparse_ranks.keys()).copied().collect();

    let mut fused: Vec<RankedCandidate> = ids
        .into_iter()
        .map(|id| {
            let dense_rank = dense_ranks.get(id).copied();
            let sparse_rank = sparse_ranks.get(id).copied();
            let rrf_score = [dense_rank, sparse_rank]
                .into_iter()
                .flatten()
                .map(|r| rrf_contribution(cfg.rrf_k, r))
                .sum();
            RankedCandidate {
                chunk_id: id.to_string(),
                dense_rank,
                sparse_rank,
                rrf_score,
            }
        })
        .collect();
    fused.sort_by(|a, b| {
        b.rrf_score
            .total_cmp(&a.rrf_score)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    fused.truncate(cfg.n_hybrid);
    Ok(fused)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    Hybrid,
    Sparse,
    Dense,
    None,
}

impl RetrievalMode {
    pub const ALL: [RetrievalMode; 4] = [
        RetrievalMode::Hybrid,
        RetrievalMode::Sparse,
        RetrievalMode::Dense,
        RetrievalMode::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RetrievalMode::Hybrid => "hybrid",
            RetrievalMode::Sparse => "sparse",
            RetrievalMode::Dense => "dense",
            RetrievalMode::None => "none",
        }
    }
}

impl fmt::Display for RetrievalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RetrievalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(RetrievalMode::Hybrid),
            "sparse" => Ok(RetrievalMode::Sparse),
            "dense" => Ok(RetrievalMode::Dense),
            "none" => Ok(RetrievalMode::None),
            other => Err(Error::UnknownVariant {
                kind: "retrieval mode",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Retrieval {
    /// Fused table, most relevant first.
    pub candidates: Vec<RankedCandidate>,
    /// Context chunks in ascending relevance: the best chunk is last.
    pub chunks: Vec<Chunk>,
}

pub fn retrieve_hybrid(
    question: &str,
    index: &HybridIndex,
    provider: Option<&dyn EmbeddingProvider>,
    cfg: &RetrievalConfig,
    mode: RetrievalMode,
) -> Result<Retrieval> {
    cfg.validate()?;
    let sparse_ids = || -> Result<Vec<String>> {
        let sparse = index.sparse.as_ref().ok_or(Error::MissingIndex("sparse"))?;
        Ok(search_sparse(sparse, question, cfg.n_sparse)?
            .into_iter()
            .map(|s| s.chunk_id)
            .collect())
    };
    let dense_ids = || -> Result<Vec<String>> {
        let dense = index.dense.as_ref().ok_or(Error::MissingIndex("dense"))?;
        let provider = provider.ok_or(Error::MissingIndex("dense embedding provider for the"))?;
        Ok(search_dense(dense, question, provider, cfg.n_dense)?
            .into_iter()
            .map(|s| s.chunk_id)
            .collect())
    };
    let none: Vec<String> = Vec::new();
    let candidates = match mode {
        RetrievalMode::None => Vec::new(),
        RetrievalMode::Sparse => rrf_fuse(&none, &sparse_ids()?, cfg)?,
        RetrievalMode::Dense => rrf_fuse(&dense_ids()?, &none, cfg)?,
        RetrievalMode::Hybrid => rrf_fuse(&dense_ids()?, &sparse_ids()?, cfg)?,
    };
    let mut chunks = candidates
        .iter()
        .map(|c| {
            index
                .chunk(&c.chunk_id)
                .cloned()
                .ok_or_else(|| Error::Snapshot(format!("index references unknown chunk {}", c.chunk_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    chunks.reverse();
    Ok(Retrieval { candidates, chunks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(c: &[RankedCandidate]) -> Vec<&str> {
        c.iter().map(|c| c.chunk_id.as_str()).collect()
    }

    #[test]
    fn shared_top_hit_scores_two_over_61() {
        let fused = rrf_fuse(&["c1"], &["c1"], &RetrievalConfig::default()).unwrap();
        assert_eq!(fused.len(), 1);
        assert_eq!(fused[0].rrf_score, 1.0 / 61.0 + 1.0 / 61.0);
        assert_eq!((fused[0].dense_rank, fused[0].sparse_rank), (Some(1), Some(1)));
    }

    #[test]
    fn symmetric_lists_tie_and_break_by_id() {
        let fused = rrf_fuse(&["c1", "c2"], &["c2", "c1"], &RetrievalConfig::default()).unwrap();
        assert_eq!(ids(&fused), vec!["c1", "c2"]);
        assert_eq!(fused[0].rrf_score, fused[1].rrf_score);
    }

    #[test]
    fn disjoint_lists_interleave() {
        let cfg = RetrievalConfig {
            n_hybrid: 6,
            ..Default::default()
        };
        let fused = rrf_fuse(&["c1", "c2", "c3"], &["c4", "c5", "c6"], &cfg).unwrap();
        assert_eq!(ids(&fused), vec!["c1", "c4", "c2", "c5", "c3", "c6"]);
        let expected = [1.0 / 61.0, 1.0 / 61.0, 1.0 / 62.0, 1.0 / 62.0, 1.0 / 63.0, 1.0 / 63.0];
        for (c, e) in fused.iter().zip(expected) {
            assert!((c.rrf_score - e).abs() < 1e-15);
        }
        let top3 = rrf_fuse(&["c1", "c2", "c3"], &["c4", "c5", "c6"], &RetrievalConfig::default()).unwrap();
        assert_eq!(ids(&top3), vec!["c1", "c4", "c2"]);
    }

    #[test]
    fn duplicate_within_list_rejected() {
        let err = rrf_fuse(&["a", "a"], &[], &RetrievalConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateCandidate(id) if id == "a"));
    }

    #[test]
    fn one_empty_list_keeps_order() {
        let cfg = RetrievalConfig {
            n_hybrid: 10,
            ..Default::default()
        };
        let none: [&str; 0] = [];
        let fused = rrf_fuse(&["z", "a", "m"], &none, &cfg).unwrap();
        assert_eq!(ids(&fused), vec!["z", "a", "m"]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("dense".parse::<RetrievalMode>().unwrap(), RetrievalMode::Dense);
        assert!("bogus".parse::<RetrievalMode>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RetrievalConfig::default().validate().is_ok());
        assert!(RetrievalConfig { n_hybrid: 0, ..Default::default() }.validate().is_err());
        assert!(RetrievalConfig { rrf_k: 0.0, ..Default::default() }.validate().is_err());
    }
}
