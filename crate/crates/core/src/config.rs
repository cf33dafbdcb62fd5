//! Application configuration. Values load from a JSON file; secrets are
//! only ever named here and read from the environment.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::adh::{load_dictionary, AbbreviationDictionary};
use crate::dense::{EmbeddingProvider, HashEmbedder, HttpEmbedder};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::fusion::RetrievalConfig;
use crate::index::HybridIndex;
use crate::ingest::ChunkingConfig;
use crate::llm::{CompletionBackend, EchoBackend, ExtractiveBackend, HttpChatBackend, HttpChatConfig};
use crate::prompt::{BackendKind, GenerationConfig, DEFAULT_SYSTEM_PROMPT};
use crate::sparse::Bm25Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dimension: usize,
    /// Provider identity recorded in the dense snapshot (http only).
    pub name: String,
    pub endpoint: String,
    pub token_env: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Hash,
            dimension: 384,
            name: "remote-embedder".into(),
            endpoint: "http://127.0.0.1:8082/embed".into(),
            token_env: None,
            timeout_secs: 30,
            retries: 2,
        }
    }
}

impl EmbedderConfig {
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self.kind {
            EmbedderKind::Hash => Box::new(HashEmbedder::new(self.dimension)?),
            EmbedderKind::Http => Box::new(HttpEmbedder::new(
                self.name.clone(),
                self.endpoint.clone(),
                self.dimension,
                self.token_env.as_deref().and_then(|v| std::env::var(v).ok()),
                Duration::from_secs(self.timeout_secs.max(1)),
                self.retries,
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub manifest: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub index_dir: PathBuf,
    pub chunking: ChunkingConfig,
    pub bm25: Bm25Params,
    pub retrieval: RetrievalConfig,
    pub generation: GenerationConfig,
    pub embedder: EmbedderConfig,
    pub llm: HttpChatConfig,
    pub system_prompt: String,
    pub bind: String,
    pub history_depth: usize,
    pub session_ttl_secs: u64,
    pub feedback_path: PathBuf,
    pub transcript_path: Option<PathBuf>,
    pub eval_parallelism: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            dictionary: None,
            index_dir: PathBuf::from("index"),
            chunking: ChunkingConfig::default(),
            bm25: Bm25Params::default(),
            retrieval: RetrievalConfig::default(),
            generation: GenerationConfig::default(),
            embedder: EmbedderConfig::default(),
            llm: HttpChatConfig::default(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            bind: "127.0.0.1:8080".into(),
            history_depth: 4,
            session_ttl_secs: 3600,
            feedback_path: PathBuf::from("feedback.jsonl"),
            transcript_path: None,
            eval_parallelism: 1,
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl AppConfig {
    /// Reads a JSON config; relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: AppConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            uri: path.display().to_string(),
            format: "config",
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if let Some(p) = cfg.manifest.as_mut() {
            rebase(base, p);
        }
        if let Some(p) = cfg.dictionary.as_mut() {
            rebase(base, p);
        }
        if let Some(p) = cfg.transcript_path.as_mut() {
            rebase(base, p);
        }
        rebase(base, &mut cfg.index_dir);
        rebase(base, &mut cfg.feedback_path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.chunking.validate()?;
        self.bm25.validate()?;
        self.retrieval.validate()?;
        self.generation.validate()?;
        if self.history_depth == 0 {
            return Err(Error::InvalidConfig("history_depth must be >= 1".into()));
        }
        Ok(())
    }

    pub fn backend(&self) -> Result<Box<dyn CompletionBackend>> {
        Ok(match self.generation.backend {
            BackendKind::StubEcho => Box::new(EchoBackend),
            BackendKind::StubExtractive => Box::new(ExtractiveBackend),
            BackendKind::HttpChat => Box::new(HttpChatBackend::new(self.llm.clone())?),
        })
    }

    pub fn load_dictionary(&self) -> Result<AbbreviationDictionary> {
        match &self.dictionary {
            Some(p) => load_dictionary(p),
            None => Ok(AbbreviationDictionary::empty()),
        }
    }

    /// Opens the persisted index and wires up the engine described by this
    /// configuration.
    pub fn open_engine(&self) -> Result<Engine> {
        self.validate()?;
        if let Some(p) = &self.dictionary {
            if !p.exists() {
                return Err(Error::InvalidConfig(format!("dictionary {} does not exist", p.display())));
            }
        }
        let index = HybridIndex::load(&self.index_dir)?;
        let embedder = match &index.dense {
            Some(_) => Some(self.embedder.build()?),
            None => None,
        };
        let mut engine = Engine::new(index, embedder, self.load_dictionary()?, self.backend()?);
        engine.retrieval = self.retrieval;
        engine.generation = self.generation;
        engine.system_prompt = self.system_prompt.clone();
        Ok(engine)
    }
}
