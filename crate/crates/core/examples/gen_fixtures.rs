//! Regenerates the synthetic corpus and datasets under `fixtures/`.
//!
//! The corpus is made of pseudo-words so that no reference answer can be
//! recovered from general vocabulary. Word choice is driven by the hashing
//! embedder's buckets (dimension 384, as in `fixtures/config.json`):
//!
//! * lexical questions carry one rare compound token found in exactly one
//!   chunk; their remaining words appear nowhere in the corpus, while three
//!   decoy chunks hold words hashing to the same buckets as those words, so
//!   the embedder prefers the decoys;
//! * paraphrase questions use words absent from the corpus whose buckets are
//!   shared only with the target chunk, so BM25 finds nothing and the
//!   embedder finds the target.
//!
//! Run: `cargo run -p hybridqa --example gen_fixtures`

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hybridqa::adh::AbbreviationEntry;
use hybridqa::dense::HashEmbedder;
use hybridqa::tokenize::tokenize;

const DIMENSION: usize = 384;
const LEXICAL: usize = 20;
const PARAPHRASE: usize = 20;
const COMMANDS: usize = 20;
const FILLER_DOCS: usize = 160;

const LEXICAL_TEMPLATE: [&str; 4] = ["how", "do", "i", "use"];
const PARAPHRASE_TEMPLATE: [&str; 3] = ["which", "note", "covers"];
const COMMAND_TEMPLATE: [&str; 2] = ["which", "command"];
const ABBR_TEMPLATE: [&str; 4] = ["what", "does", "stand", "for"];

struct Words {
    rng: ChaCha8Rng,
    embedder: HashEmbedder,
    used: HashSet<String>,
    reserved: BTreeSet<usize>,
}

impl Words {
    fn pseudo(&mut self) -> String {
        const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kr"];
        const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
        const CODAS: [&str; 6] = ["k", "l", "n", "r", "x", "z"];
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut self.rng).unwrap());
                w.push_str(VOWELS.choose(&mut self.rng).unwrap());
            }
            w.push_str(CODAS.choose(&mut self.rng).unwrap());
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    /// A fresh word outside every reserved bucket.
    fn free(&mut self) -> String {
        loop {
            let w = self.pseudo();
            if !self.reserved.contains(&self.embedder.bucket(&w)) {
                return w;
            }
        }
    }

    /// A fresh word landing in `bucket`.
    fn in_bucket(&mut self, bucket: usize) -> String {
        loop {
            let w = self.pseudo();
            if self.embedder.bucket(&w) == bucket {
                return w;
            }
        }
    }

    /// A fresh token in a bucket nobody else uses; the bucket becomes reserved.
    fn exclusive(&mut self, make: impl Fn(&mut Self) -> String) -> String {
        loop {
            let w = make(self);
            let b = self.embedder.bucket(&w);
            if self.reserved.insert(b) {
                return w;
            }
        }
    }

    fn sentence(&mut self, vocab: &[String], len: usize) -> String {
        (0..len)
            .map(|_| vocab.choose(&mut self.rng).unwrap().clone())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn write_jsonl(path: &Path, rows: &[serde_json::Value]) {
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, text).unwrap();
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let dict: Vec<AbbreviationEntry> =
        serde_json::from_str(&fs::read_to_string(root.join("abbreviations.json")).unwrap()).unwrap();

    let embedder = HashEmbedder::new(DIMENSION).unwrap();
    let mut words = Words {
        rng: ChaCha8Rng::seed_from_u64(20240501),
        embedder,
        used: HashSet::new(),
        reserved: BTreeSet::new(),
    };
    // Keep every dictionary and question word out of the corpus vocabulary.
    for e in &dict {
        let text = format!("{} {} {}", e.abbr, e.name, e.desc.clone().unwrap_or_default());
        words.used.extend(tokenize(&text));
    }
    for w in LEXICAL_TEMPLATE
        .iter()
        .chain(&PARAPHRASE_TEMPLATE)
        .chain(&COMMAND_TEMPLATE)
        .chain(&ABBR_TEMPLATE)
    {
        words.used.insert(w.to_string());
        words.reserved.insert(embedder.bucket(w));
    }
    let template_buckets: BTreeSet<usize> = LEXICAL_TEMPLATE
        .iter()
        .chain(&PARAPHRASE_TEMPLATE)
        .chain(&["command"])
        .map(|w| embedder.bucket(w))
        .collect();
    assert_eq!(template_buckets.len(), 8, "question template words must not share buckets");

    let rare: Vec<String> = (0..LEXICAL)
        .map(|_| words.exclusive(|w| format!("{}::{}_{}", w.pseudo(), w.pseudo(), w.pseudo())))
        .collect();
    let para_queries: Vec<Vec<String>> = (0..PARAPHRASE)
        .map(|_| (0..3).map(|_| words.exclusive(Words::pseudo)).collect())
        .collect();
    let commands: Vec<String> = (0..COMMANDS)
        .map(|_| words.exclusive(|w| format!("ess::{}_{}", w.pseudo(), w.pseudo())))
        .collect();

    let filler: Vec<String> = (0..400).map(|_| words.free()).collect();
    let mut docs: Vec<String> = Vec::new();
    let mut q2a = Vec::new();
    let mut cmds = Vec::new();

    for token in &rare {
        let answer_words: Vec<String> = (0..5).map(|_| words.free()).collect();
        let answer = format!("{token} {}", answer_words.join(" "));
        let rest = words.sentence(&filler, 6);
        docs.push(format!("{answer}.\n{rest}.\n"));
        q2a.push(json!({ "question": format!("How do I use {token}?"), "answer": answer }));
    }
    for query in &para_queries {
        let mut target: Vec<String> = query.iter().map(|q| words.in_bucket(embedder.bucket(q))).collect();
        target.extend((0..2).map(|_| words.free()));
        let answer = target.join(" ");
        docs.push(format!("{answer}.\n"));
        q2a.push(json!({ "question": format!("Which note covers {}?", query.join(" ")), "answer": answer }));
    }
    for extra in 0..3 {
        let mut decoy: Vec<String> = LEXICAL_TEMPLATE.iter().map(|t| words.in_bucket(embedder.bucket(t))).collect();
        decoy.extend((0..extra).map(|_| words.free()));
        docs.push(format!("{}.\n", decoy.join(" ")));
    }
    for (i, cmd) in commands.iter().enumerate() {
        let synopsis: Vec<String> = (0..4).map(|_| words.free()).collect();
        let abbr = &dict[i % dict.len()].abbr;
        let tail = words.sentence(&filler, 5);
        docs.push(format!("{cmd} {}.\n{tail} {abbr} {}.\n", synopsis.join(" "), words.sentence(&filler, 3)));
        cmds.push(json!({ "question": format!("Which command {}?", synopsis.join(" ")), "answer": cmd }));
    }
    for i in 0..FILLER_DOCS {
        let n1 = words.rng.random_range(6..=9);
        let n2 = words.rng.random_range(6..=9);
        let mut text = format!("{}.\n{}", words.sentence(&filler, n1), words.sentence(&filler, n2));
        if i % 8 == 0 {
            text.push_str(&format!(" {}", dict[(i / 8) % dict.len()].abbr));
        }
        docs.push(text + ".\n");
    }
    docs.shuffle(&mut words.rng);

    let corpus = root.join("corpus");
    if corpus.exists() {
        fs::remove_dir_all(&corpus).unwrap();
    }
    fs::create_dir_all(&corpus).unwrap();
    let mut manifest = Vec::new();
    for (i, body) in docs.iter().enumerate() {
        let name = format!("note-{i:03}.txt");
        fs::write(corpus.join(&name), body).unwrap();
        manifest.push(json!({ "uri": format!("corpus/{name}") }));
    }
    fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap() + "\n").unwrap();

    let datasets = root.join("datasets");
    fs::create_dir_all(&datasets).unwrap();
    write_jsonl(&datasets.join("q2a.jsonl"), &q2a);
    write_jsonl(&datasets.join("cmds.jsonl"), &cmds);
    let abbr: Vec<_> = dict
        .iter()
        .map(|e| json!({ "question": format!("What does {} stand for?", e.abbr), "answer": e.name }))
        .collect();
    write_jsonl(&datasets.join("abbr.jsonl"), &abbr);
    println!("wrote {} documents, {} q2a, {} cmds, {} abbr", docs.len(), q2a.len(), cmds.len(), abbr.len());
}
