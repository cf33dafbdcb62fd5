#![allow(dead_code)]
//! Brute-force reference implementations the library is checked against.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use hybridqa::ingest::Chunk;
use hybridqa::tokenize::tokenize;

use super::chunk;

/// Scores every chunk directly from term counts, without an inverted index.
/// Returns chunks with a positive score, best first, ties by ascending id.
pub fn bm25_brute_force(chunks: &[Chunk], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = chunks.iter().map(|c| tokenize(&c.text)).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;

    let mut terms: Vec<String> = Vec::new();
    for t in tokenize(query) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }

    let df: Vec<f64> = terms
        .iter()
        .map(|term| docs.iter().filter(|d| d.contains(term)).count() as f64)
        .collect();

    let mut out = Vec::new();
    for (c, doc) in chunks.iter().zip(&docs) {
        let mut score = 0.0;
        let mut matched = false;
        for (term, &df) in terms.iter().zip(&df) {
            let tf = doc.iter().filter(|t| *t == term).count();
            if tf == 0 {
                continue;
            }
            matched = true;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let tf = tf as f64;
            let norm = 1.0 - b + b * (doc.len() as f64 / avgdl);
            score += idf * (tf * (k1 + 1.0) / (tf + k1 * norm));
        }
        if matched {
            out.push((c.chunk_id.clone(), score));
        }
    }
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    out
}

/// Direct evaluation of the fusion sum over the union of both lists.
pub fn rrf_direct(dense: &[String], sparse: &[String], k: f64) -> Vec<(String, f64)> {
    let ids: BTreeSet<&String> = dense.iter().chain(sparse).collect();
    let mut out: Vec<(String, f64)> = ids
        .into_iter()
        .map(|id| {
            let mut s = 0.0;
            if let Some(p) = dense.iter().position(|d| d == id) {
                s += 1.0 / (k + (p + 1) as f64);
            }
            if let Some(p) = sparse.iter().position(|d| d == id) {
                s += 1.0 / (k + (p + 1) as f64);
            }
            (id.clone(), s)
        })
        .collect();
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    out
}

/// Random corpus of `t{i}` words with a skewed term distribution.
pub fn random_corpus<R: Rng>(rng: &mut R, max_chunks: usize, max_vocab: usize) -> (Vec<Chunk>, Vec<String>) {
    let n = rng.random_range(1..=max_chunks);
    let v = rng.random_range(1..=max_vocab);
    corpus_of(rng, n, v)
}

pub fn corpus_of<R: Rng>(rng: &mut R, n_chunks: usize, vocab_size: usize) -> (Vec<Chunk>, Vec<String>) {
    let vocab: Vec<String> = (0..vocab_size).map(|i| format!("t{i}")).collect();
    let mut ids: Vec<usize> = (0..n_chunks).collect();
    ids.shuffle(rng);
    let chunks = ids
        .into_iter()
        .map(|i| {
            let len = rng.random_range(1..=40);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let r: f64 = rng.random();
                    vocab[((r * r) * vocab.len() as f64) as usize].as_str()
                })
                .collect();
            chunk(&format!("doc{i}#0000"), &words.join(" "))
        })
        .collect();
    (chunks, vocab)
}

pub fn random_query<R: Rng>(rng: &mut R, vocab: &[String]) -> String {
    let mut words: Vec<String> = (0..rng.random_range(1..=6))
        .map(|_| vocab.choose(rng).unwrap().clone())
        .collect();
    if rng.random_bool(0.2) {
        words.push("unseen".into());
    }
    words.join(" ")
}

/// Two ranked id lists over a shared pool, with overlap.
pub fn random_rank_lists<R: Rng>(rng: &mut R) -> (Vec<String>, Vec<String>) {
    let pool: Vec<String> = (0..rng.random_range(1..=40)).map(|i| format!("c{i:02}")).collect();
    let pick = |rng: &mut R| {
        let mut p = pool.clone();
        p.shuffle(rng);
        p.truncate(rng.random_range(0..=pool.len()));
        p
    };
    let dense = pick(rng);
    let sparse = pick(rng);
    (dense, sparse)
}

/// ROUGE-L of a single sentence pair via plain LCS length.
pub fn rouge_l_single(reference: &[String], candidate: &[String]) -> (f64, f64) {
    let (m, n) = (reference.len(), candidate.len());
    let mut t = vec![vec![0usize; n + 1]; m + 1];
    for i in 0..m {
        for j in 0..n {
            t[i + 1][j + 1] = if reference[i] == candidate[j] {
                t[i][j] + 1
            } else {
                t[i][j + 1].max(t[i + 1][j])
            };
        }
    }
    let l = t[m][n] as f64;
    (l / n as f64, l / m as f64)
}

pub fn term_counts(tokens: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_default() += 1;
    }
    m
}
