#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use hybridqa::config::AppConfig;
use hybridqa::ingest::{ingest_manifest, load_manifest, Chunk};
use hybridqa::prompt::BackendKind;
use hybridqa::{AbbreviationDictionary, Engine, HashEmbedder, HybridIndex};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_config() -> AppConfig {
    AppConfig::load(&fixtures().join("config.json")).expect("fixture config loads")
}

pub fn fixture_index() -> HybridIndex {
    let cfg = fixture_config();
    let entries = load_manifest(cfg.manifest.as_ref().unwrap()).unwrap();
    let outcome = ingest_manifest(&entries, &cfg.chunking).unwrap();
    assert!(outcome.warnings.is_empty(), "{:?}", outcome.warnings);
    HybridIndex::build(&outcome, cfg.bm25, &HashEmbedder::new(cfg.embedder.dimension).unwrap()).unwrap()
}

pub fn fixture_dictionary() -> AbbreviationDictionary {
    fixture_config().load_dictionary().unwrap()
}

/// Engine over the shipped corpus, built in memory.
pub fn fixture_engine(backend: BackendKind) -> Engine {
    let mut cfg = fixture_config();
    cfg.generation.backend = backend;
    let mut engine = Engine::new(
        fixture_index(),
        Some(cfg.embedder.build().unwrap()),
        fixture_dictionary(),
        cfg.backend().unwrap(),
    );
    engine.retrieval = cfg.retrieval;
    engine.generation = cfg.generation;
    engine
}

pub fn chunk(id: &str, text: &str) -> Chunk {
    Chunk {
        chunk_id: id.into(),
        doc_id: id.split('#').next().unwrap().into(),
        ordinal: 0,
        text: text.into(),
        char_start: 0,
        char_end: text.chars().count(),
    }
}
