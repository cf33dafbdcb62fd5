//! End-to-end question answering over a loaded hybrid index.

use serde::{Deserialize, Serialize};

use crate::adh::{find_abbreviations, render_snippets, AbbreviationDictionary, AbbreviationEntry};
use crate::dense::EmbeddingProvider;
use crate::error::Result;
use crate::fusion::{retrieve_hybrid, RankedCandidate, RetrievalConfig, RetrievalMode};
use crate::index::HybridIndex;
use crate::llm::{generate, AnswerEnvelope, CompletionBackend};
use crate::prompt::{build_prompt, GenerationConfig, HistoryTurn, DEFAULT_SYSTEM_PROMPT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub chunk_id: String,
    pub doc_id: String,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskOutcome {
    pub envelope: AnswerEnvelope,
    /// Fused candidate table, most relevant first.
    pub candidates: Vec<RankedCandidate>,
    pub abbreviations: Vec<AbbreviationEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AskOptions {
    pub mode: RetrievalMode,
    pub adh: bool,
    pub retrieval: RetrievalConfig,
}

pub struct Engine {
    pub index: HybridIndex,
    pub embedder: Option<Box<dyn EmbeddingProvider>>,
    pub dictionary: AbbreviationDictionary,
    pub backend: Box<dyn CompletionBackend>,
    pub retrieval: RetrievalConfig,
    pub generation: GenerationConfig,
    pub system_prompt: String,
}

impl Engine {
    pub fn new(
        index: HybridIndex,
        embedder: Option<Box<dyn EmbeddingProvider>>,
        dictionary: AbbreviationDictionary,
        backend: Box<dyn CompletionBackend>,
    ) -> Self {
        Self {
            index,
            embedder,
            dictionary,
            backend,
            retrieval: RetrievalConfig::default(),
            generation: GenerationConfig::default(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
        }
    }

    pub fn options(&self, mode: RetrievalMode, adh: bool) -> AskOptions {
        AskOptions {
            mode,
            adh,
            retrieval: self.retrieval,
        }
    }

    /// Retrieve, add abbreviation knowledge when enabled, build the prompt
    /// and generate.
    pub fn ask(&self, question: &str, history: &[HistoryTurn], opts: &AskOptions) -> Result<AskOutcome> {
        let retrieval = retrieve_hybrid(
            question,
            &self.index,
            self.embedder.as_deref(),
            &opts.retrieval,
            opts.mode,
        )?;
        let abbreviations = if opts.adh {
            find_abbreviations(question, &retrieval.chunks, &self.dictionary)
        } else {
            Vec::new()
        };
        let bundle = build_prompt(
            question,
            &retrieval.chunks,
            &render_snippets(&abbreviations),
            history,
            &self.system_prompt,
        )?;
        let envelope = generate(&bundle, self.backend.as_ref(), &self.generation)?;
        Ok(AskOutcome {
            envelope,
            candidates: retrieval.candidates,
            abbreviations,
        })
    }

    pub fn source_refs(&self, chunk_ids: &[String]) -> Vec<SourceRef> {
        chunk_ids
            .iter()
            .map(|id| {
                let doc_id = self.index.chunk(id).map(|c| c.doc_id.clone()).unwrap_or_default();
                let uri = self.index.uri_of(&doc_id).unwrap_or_default().to_string();
                SourceRef {
                    chunk_id: id.clone(),
                    doc_id,
                    uri,
                }
            })
            .collect()
    }
}
