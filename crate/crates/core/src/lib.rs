//! Question answering over a document corpus with hybrid retrieval.
//!
//! Documents are chunked and indexed twice: a BM25 inverted index for exact
//! term matches and an embedding matrix for semantic matches. At query time
//! both rankings are merged with reciprocal rank fusion, abbreviations found
//! in the query or context are expanded from a dictionary, and the assembled
//! prompt goes to a pluggable completion backend. The `eval` module scores
//! answers with ROUGE-Lsum across retrieval and abbreviation ablations.

pub mod adh;
pub mod config;
pub mod dense;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fusion;
mod http;
pub mod index;
pub mod ingest;
pub mod llm;
pub mod prompt;
pub mod rouge;
pub mod service;
pub mod snapshot;
pub mod sparse;
pub mod tokenize;

pub use adh::{find_abbreviations, load_dictionary, render_snippets, AbbreviationDictionary, AbbreviationEntry};
pub use config::AppConfig;
pub use dense::{build_dense, search_dense, test_embedder, DenseIndex, EmbeddingProvider, HashEmbedder};
pub use engine::{AskOptions, AskOutcome, Engine, SourceRef};
pub use error::{Error, Result};
pub use eval::{render_report, run_eval, AblationReport, Arm, QaExample, ReportFormat};
pub use fusion::{retrieve_hybrid, rrf_fuse, RankedCandidate, RetrievalConfig, RetrievalMode};
pub use http::RetryPolicy;
pub use index::HybridIndex;
pub use ingest::{chunk_document, ingest_corpus, load_document, Chunk, ChunkingConfig, SourceDocument};
pub use llm::{generate, AnswerEnvelope, CompletionBackend, EchoBackend, ExtractiveBackend};
pub use prompt::{build_prompt, truncate_to_budget, GenerationConfig, PromptBundle};
pub use rouge::{rouge_lsum, RougeScore};
pub use sparse::{build_sparse, search_sparse, Bm25Params, InvertedIndex};
pub use tokenize::tokenize;
