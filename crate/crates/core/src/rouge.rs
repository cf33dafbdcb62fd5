//! Summary-level ROUGE-L (ROUGE-Lsum) with union-LCS hit counting.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::tokenize::{simple_tokenize, split_sentences};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

fn sentence_tokens(text: &str) -> Vec<Vec<String>> {
    split_sentences(text)
        .into_iter()
        .map(simple_tokenize)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Positions in `reference` of one longest common subsequence with
/// `candidate`, recovered by the standard backtrack (prefer moving left in
/// the candidate when that keeps a strictly longer prefix LCS).
pub fn lcs_positions<T: PartialEq>(reference: &[T], candidate: &[T]) -> Vec<usize> {
    let (rows, cols) = (reference.len(), candidate.len());
    let mut table = vec![vec![0u32; cols + 1]; rows + 1];
    for i in 1..=rows {
        for j in 1..=cols {
            table[i][j] = if reference[i - 1] == candidate[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    let (mut i, mut j) = (rows, cols);
    let mut positions = Vec::with_capacity(table[rows][cols] as usize);
    while i > 0 && j > 0 {
        if reference[i - 1] == candidate[j - 1] {
            positions.push(i - 1);
            i -= 1;
            j -= 1;
        } else if table[i][j - 1] > table[i - 1][j] {
            j -= 1;
        } else {
            i -= 1;
        }
    }
    positions.reverse();
    positions
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    lcs_positions(a, b).len()
}

/// ROUGE-Lsum of `candidate` against `reference`.
///
/// Each reference sentence takes the union of its LCS positions against
/// every candidate sentence. Hits are then capped by the remaining token
/// counts on both sides so a token is never credited more often than it
/// occurs, which keeps precision and recall within [0, 1].
pub fn rouge_lsum(reference: &str, candidate: &str) -> RougeScore {
    let refs = sentence_tokens(reference);
    let cands = sentence_tokens(candidate);
    let ref_total: usize = refs.iter().map(Vec::len).sum();
    let cand_total: usize = cands.iter().map(Vec::len).sum();
    if ref_total == 0 || cand_total == 0 {
        return RougeScore::ZERO;
    }

    let mut ref_left: HashMap<&str, usize> = HashMap::new();
    for t in refs.iter().flatten() {
        *ref_left.entry(t).or_default() += 1;
    }
    let mut cand_left: HashMap<&str, usize> = HashMap::new();
    for t in cands.iter().flatten() {
        *cand_left.entry(t).or_default() += 1;
    }

    let mut hits = 0usize;
    for r in &refs {
        let mut union = vec![false; r.len()];
        for c in &cands {
            for p in lcs_positions(r, c) {
                union[p] = true;
            }
        }
        for (token, _) in r.iter().zip(&union).filter(|(_, &hit)| hit) {
            let (Some(rl), Some(cl)) = (ref_left.get_mut(token.as_str()), cand_left.get_mut(token.as_str())) else {
                continue;
            };
            if *rl > 0 && *cl > 0 {
                hits += 1;
                *rl -= 1;
                *cl -= 1;
            }
        }
    }
    RougeScore::from_pr(hits as f64 / cand_total as f64, hits as f64 / ref_total as f64)
}
