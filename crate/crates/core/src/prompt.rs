//! Prompt assembly and token-budget truncation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Chunk;

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a helpful AI language model. Your primary function is to assist users in answering questions, generating text, and engaging in conversation. Given the following extracted parts of a long document and a question, create a final answer. If asking for a command, please return the first one only.";

pub const SYSTEM_LABEL: &str = "System:";
pub const HISTORY_LABEL: &str = "History:";
pub const CONTEXT_LABEL: &str = "Context:";
pub const ABBREVIATIONS_LABEL: &str = "Abbreviations:";
pub const QUESTION_LABEL: &str = "Question:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub chunk_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryTurn {
    pub question: String,
    pub answer: String,
}

/// Everything that goes into one completion request. `context_blocks` is in
/// ascending relevance, so the best chunk sits right before the question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub history: Vec<HistoryTurn>,
    pub context_blocks: Vec<ContextBlock>,
    pub abbreviation_block: String,
    pub query: String,
}

pub fn build_prompt(
    query: &str,
    context_chunks: &[Chunk],
    abbr_snippets: &str,
    history: &[HistoryTurn],
    system_prompt: &str,
) -> Result<PromptBundle> {
    if query.trim().is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(PromptBundle {
        system_prompt: system_prompt.to_string(),
        history: history.to_vec(),
        context_blocks: context_chunks
            .iter()
            .map(|c| ContextBlock {
                chunk_id: c.chunk_id.clone(),
                text: c.text.clone(),
            })
            .collect(),
        abbreviation_block: abbr_snippets.to_string(),
        query: query.to_string(),
    })
}

impl PromptBundle {
    /// Labeled sections in the fixed order system, history, context,
    /// abbreviations, question. Empty sections are left out.
    pub fn render(&self) -> String {
        let mut sections = Vec::with_capacity(5);
        if !self.system_prompt.is_empty() {
            sections.push(format!("{SYSTEM_LABEL} {}", self.system_prompt));
        }
        if !self.history.is_empty() {
            let turns: Vec<String> = self
                .history
                .iter()
                .map(|t| format!("Q: {}\nA: {}", t.question, t.answer))
                .collect();
            sections.push(format!("{HISTORY_LABEL}\n{}", turns.join("\n")));
        }
        if !self.context_blocks.is_empty() {
            let blocks: Vec<&str> = self.context_blocks.iter().map(|b| b.text.as_str()).collect();
            sections.push(format!("{CONTEXT_LABEL}\n{}", blocks.join("\n\n")));
        }
        if !self.abbreviation_block.is_empty() {
            sections.push(format!("{ABBREVIATIONS_LABEL}\n{}", self.abbreviation_block));
        }
        sections.push(format!("{QUESTION_LABEL} {}", self.query));
        sections.join("\n\n")
    }

    /// Context chunk ids, most relevant first.
    pub fn sources(&self) -> Vec<String> {
        self.context_blocks.iter().rev().map(|b| b.chunk_id.clone()).collect()
    }
}

pub trait TokenCounter {
    fn count_tokens(&self, text: &str) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    StubEcho,
    StubExtractive,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "http_chat" => Ok(BackendKind::HttpChat),
            "stub_echo" => Ok(BackendKind::StubEcho),
            "stub_extractive" => Ok(BackendKind::StubExtractive),
            _ => Err(Error::UnknownVariant {
                kind: "backend",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub context_length: usize,
    pub max_new_tokens: usize,
    pub backend: BackendKind,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            context_length: 8192,
            max_new_tokens: 4096,
            backend: BackendKind::StubExtractive,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_new_tokens == 0 || self.max_new_tokens >= self.context_length {
            return Err(Error::InvalidConfig(format!(
                "max_new_tokens ({}) must be positive and below context_length ({})",
                self.max_new_tokens, self.context_length
            )));
        }
        Ok(())
    }

    pub fn prompt_budget(&self) -> usize {
        self.context_length.saturating_sub(self.max_new_tokens)
    }
}

/// Drops the oldest history turns, then the least relevant context blocks,
/// until the rendered prompt fits `context_length - max_new_tokens`. The
/// system prompt, abbreviation block and query are never removed.
pub fn truncate_to_budget(
    bundle: &PromptBundle,
    cfg: &GenerationConfig,
    counter: &dyn TokenCounter,
) -> Result<PromptBundle> {
    let budget = cfg.prompt_budget();
    let mut out = bundle.clone();
    loop {
        let used = counter.count_tokens(&out.render());
        if used <= budget {
            return Ok(out);
        }
        if !out.history.is_empty() {
            out.history.remove(0);
        } else if !out.context_blocks.is_empty() {
            out.context_blocks.remove(0);
        } else {
            return Err(Error::Budget { required: used, budget });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(id: &str, text: &str) -> Chunk {
        Chunk {
            chunk_id: id.into(),
            doc_id: "d".into(),
            ordinal: 0,
            text: text.into(),
            char_start: 0,
            char_end: text.chars().count(),
        }
    }

    fn turn(q: &str, a: &str) -> HistoryTurn {
        HistoryTurn {
            question: q.into(),
            answer: a.into(),
        }
    }

    fn cfg(context_length: usize, max_new_tokens: usize) -> GenerationConfig {
        GenerationConfig {
            context_length,
            max_new_tokens,
            backend: BackendKind::StubEcho,
        }
    }

    #[test]
    fn query_only_layout() {
        let b = build_prompt("what now", &[], "", &[], "Be brief.").unwrap();
        assert_eq!(b.render(), "System: Be brief.\n\nQuestion: what now");
    }

    #[test]
    fn empty_query_rejected() {
        assert!(matches!(build_prompt("  ", &[], "", &[], "s"), Err(Error::EmptyQuery)));
    }

    #[test]
    fn default_system_prompt_text() {
        assert!(DEFAULT_SYSTEM_PROMPT.starts_with("You are a helpful AI language model."));
        assert!(DEFAULT_SYSTEM_PROMPT.ends_with("please return the first one only."));
    }

    #[test]
    fn context_keeps_ascending_order_and_abbr_sits_before_question() {
        // Retrieval hands chunks over least relevant first.
        let ctx = [chunk("c3", "third"), chunk("c2", "second"), chunk("c1", "first")];
        let b = build_prompt("q?", &ctx, "RAT is usually short for Required Arrival Time.", &[], "sys").unwrap();
        let r = b.render();
        let (p3, p2, p1) = (r.find("third").unwrap(), r.find("second").unwrap(), r.find("first").unwrap());
        assert!(p3 < p2 && p2 < p1);
        let abbr = r.find("RAT is usually").unwrap();
        assert!(p1 < abbr && abbr < r.find("Question:").unwrap());
        assert_eq!(b.sources(), vec!["c1", "c2", "c3"]);
    }

    #[test]
    fn under_budget_is_identity() {
        let b = build_prompt("q", &[chunk("c", "x y")], "", &[turn("a", "b")], "s").unwrap();
        assert_eq!(truncate_to_budget(&b, &cfg(100, 10), &WhitespaceCounter).unwrap(), b);
    }

    #[test]
    fn oldest_history_goes_first() {
        // Rendered token counts under whitespace splitting:
        // "System: s" 2, "History:" 1, each turn "Q: hN\nA: aN" 4,
        // "Context:" 1, "c1 text" 2, "Question: q" 2. Two turns: 2+1+8+1+2+2 = 16.
        let b = build_prompt("q", &[chunk("c1", "c1 text")], "", &[turn("h1", "a1"), turn("h2", "a2")], "s").unwrap();
        assert_eq!(WhitespaceCounter.count_tokens(&b.render()), 16);
        let t = truncate_to_budget(&b, &cfg(15 + 5, 5), &WhitespaceCounter).unwrap();
        assert_eq!(t.history, vec![turn("h2", "a2")]);
        assert_eq!(t.context_blocks.len(), 1);
    }

    #[test]
    fn least_relevant_context_goes_first() {
        // "System: s" 2 + "Context:" 1 + "low low low" 3 + "high high" 2 + "Question: q" 2 = 10.
        let b = build_prompt("q", &[chunk("lo", "low low low"), chunk("hi", "high high")], "", &[], "s").unwrap();
        assert_eq!(WhitespaceCounter.count_tokens(&b.render()), 10);
        let t = truncate_to_budget(&b, &cfg(8 + 1, 1), &WhitespaceCounter).unwrap();
        assert_eq!(t.context_blocks.len(), 1);
        assert_eq!(t.context_blocks[0].chunk_id, "hi");
    }

    #[test]
    fn fixed_parts_over_budget_is_an_error() {
        let b = build_prompt("a long question here", &[chunk("c", "x")], "AB is usually short for C.", &[], "sys").unwrap();
        let err = truncate_to_budget(&b, &cfg(4, 1), &WhitespaceCounter).unwrap_err();
        assert!(matches!(err, Error::Budget { budget: 3, .. }));
    }

    #[test]
    fn generation_config_validation() {
        assert!(GenerationConfig::default().validate().is_ok());
        assert!(cfg(10, 10).validate().is_err());
        assert!(cfg(10, 0).validate().is_err());
    }
}
