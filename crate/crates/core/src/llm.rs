//! Completion backends: a JSON-over-HTTP chat client and two deterministic
//! stubs used by the test and evaluation harnesses.

use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::{post_json, RetryPolicy};
use crate::prompt::{truncate_to_budget, GenerationConfig, PromptBundle, TokenCounter, WhitespaceCounter};
use crate::tokenize::{split_sentences, tokenize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: usize,
    #[serde(default)]
    pub completion_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default)]
    pub usage: Usage,
}

pub struct CompletionRequest<'a> {
    pub bundle: &'a PromptBundle,
    pub rendered: &'a str,
    pub config: &'a GenerationConfig,
}

pub trait CompletionBackend: Send + Sync {
    fn name(&self) -> &str;

    fn count_tokens(&self, text: &str) -> usize {
        WhitespaceCounter.count_tokens(text)
    }

    /// Hook for model-specific prompt templates.
    fn render(&self, bundle: &PromptBundle) -> String {
        bundle.render()
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion>;
}

struct BackendCounter<'a>(&'a dyn CompletionBackend);

impl TokenCounter for BackendCounter<'_> {
    fn count_tokens(&self, text: &str) -> usize {
        self.0.count_tokens(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerEnvelope {
    pub answer: String,
    /// Retrieved chunk ids, most relevant first.
    pub sources: Vec<String>,
    pub usage: Usage,
}

pub fn generate(
    bundle: &PromptBundle,
    backend: &dyn CompletionBackend,
    cfg: &GenerationConfig,
) -> Result<AnswerEnvelope> {
    let fitted = truncate_to_budget(bundle, cfg, &BackendCounter(backend))?;
    let rendered = backend.render(&fitted);
    let completion = backend.complete(&CompletionRequest {
        bundle: &fitted,
        rendered: &rendered,
        config: cfg,
    })?;
    Ok(AnswerEnvelope {
        answer: completion.text,
        sources: bundle.sources(),
        usage: completion.usage,
    })
}

fn stub_usage(backend: &dyn CompletionBackend, rendered: &str, text: &str) -> Usage {
    Usage {
        prompt_tokens: backend.count_tokens(rendered),
        completion_tokens: backend.count_tokens(text),
    }
}

/// Returns the abbreviation block followed by the first context block.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl CompletionBackend for EchoBackend {
    fn name(&self) -> &str {
        "stub_echo"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let bundle = request.bundle;
        let parts: Vec<&str> = [
            bundle.abbreviation_block.as_str(),
            bundle.context_blocks.first().map_or("", |b| b.text.as_str()),
        ]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
        let text = parts.join("\n");
        Ok(Completion {
            usage: stub_usage(self, request.rendered, &text),
            text,
        })
    }
}

/// Answers with the context sentence sharing the most distinct tokens with
/// the query. Blocks are scanned most relevant first and the earliest
/// sentence wins ties, so with no overlap at all the answer is the opening
/// sentence of the best block. No context gives an empty answer.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractiveBackend;

pub fn extract_best_sentence(bundle: &PromptBundle) -> String {
    let query: HashSet<String> = tokenize(&bundle.query).into_iter().collect();
    let mut best: Option<(usize, &str)> = None;
    for block in bundle.context_blocks.iter().rev() {
        for sentence in split_sentences(&block.text) {
            let words: HashSet<String> = tokenize(sentence).into_iter().collect();
            let overlap = words.intersection(&query).count();
            if best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, sentence));
            }
        }
    }
    best.map(|(_, s)| s.to_string()).unwrap_or_default()
}

impl CompletionBackend for ExtractiveBackend {
    fn name(&self) -> &str {
        "stub_extractive"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let text = extract_best_sentence(request.bundle);
        Ok(Completion {
            usage: stub_usage(self, request.rendered, &text),
            text,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpChatConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for HttpChatConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8081/v1/complete".into(),
            model: "default".into(),
            token_env: None,
            temperature: 0.0,
            timeout_secs: 120,
            retries: 2,
        }
    }
}

/// `POST {model, prompt, max_new_tokens, temperature}` returning `{text, usage}`.
pub struct HttpChatBackend {
    config: HttpChatConfig,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_new_tokens: usize,
    temperature: f64,
}

impl HttpChatBackend {
    pub fn new(config: HttpChatConfig) -> Result<Self> {
        let token = config.token_env.as_deref().and_then(|var| std::env::var(var).ok());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| Error::Backend {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { config, token, client })
    }
}

impl CompletionBackend for HttpChatBackend {
    fn name(&self) -> &str {
        "http_chat"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let body = ChatRequest {
            model: &self.config.model,
            prompt: request.rendered,
            max_new_tokens: request.config.max_new_tokens,
            temperature: self.config.temperature,
        };
        post_json(
            &self.client,
            &self.config.endpoint,
            self.token.as_deref(),
            &body,
            RetryPolicy {
                retries: self.config.retries,
            },
        )
        .map_err(|(attempts, message)| Error::Backend { attempts, message })
    }
}
