mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::chunk;
use common::oracle::{bm25_brute_force, random_corpus, random_query, rouge_l_single, rrf_direct};
use hybridqa::dense::dot;
use hybridqa::ingest::{chunk_document, ChunkingConfig, DocFormat, SourceDocument};
use hybridqa::prompt::{
    build_prompt, truncate_to_budget, BackendKind, GenerationConfig, HistoryTurn, WhitespaceCounter,
    ABBREVIATIONS_LABEL, CONTEXT_LABEL, HISTORY_LABEL, QUESTION_LABEL, SYSTEM_LABEL,
};
use hybridqa::tokenize::simple_tokenize;
use hybridqa::{build_dense, build_sparse, rouge_lsum, rrf_fuse, search_dense, search_sparse, HashEmbedder, RetrievalConfig};

fn doc(body: String) -> SourceDocument {
    SourceDocument {
        doc_id: "d".into(),
        uri: "d.txt".into(),
        format: DocFormat::PlainText,
        body,
        metadata: Default::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chunks_reconstruct_body(body in "[a-zé ]{1,400}", size in 2usize..64, overlap_frac in 0.0f64..0.9) {
        let overlap = ((size as f64) * overlap_frac) as usize;
        let cfg = ChunkingConfig::new(size, overlap.min(size - 1)).unwrap();
        let d = doc(body.clone());
        let chunks = chunk_document(&d, &cfg);
        let chars: Vec<char> = body.chars().collect();
        let n = chars.len();

        let expected = if n <= cfg.chunk_size { 1 } else { (n - cfg.chunk_size).div_ceil(cfg.stride()) + 1 };
        prop_assert_eq!(chunks.len(), expected);

        let mut rebuilt = String::new();
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.ordinal, i);
            prop_assert!(c.char_start < c.char_end);
            prop_assert!(c.text.chars().count() <= cfg.chunk_size);
            let slice: String = chars[c.char_start..c.char_end].iter().collect();
            prop_assert_eq!(&slice, &c.text);
            if i + 1 < chunks.len() {
                prop_assert_eq!(chunks[i + 1].char_start, c.char_end - cfg.chunk_overlap);
            }
            let skip = if i == 0 { 0 } else { chunks[i - 1].char_end - c.char_start };
            rebuilt.extend(c.text.chars().skip(skip));
        }
        prop_assert_eq!(rebuilt, body);
        prop_assert_eq!(chunks.last().unwrap().char_end, n);
    }

    #[test]
    fn bm25_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (chunks, vocab) = random_corpus(&mut rng, 60, 30);
        let index = build_sparse(&chunks).unwrap();
        for _ in 0..5 {
            let q = random_query(&mut rng, &vocab);
            let got = search_sparse(&index, &q, chunks.len()).unwrap();
            let want = bm25_brute_force(&chunks, &q, 1.2, 0.75);
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                prop_assert_eq!(&g.chunk_id, &w.0);
                prop_assert!((g.score - w.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rrf_properties(seed in any::<u64>(), n_hybrid in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dense, sparse) = common::oracle::random_rank_lists(&mut rng);
        let cfg = RetrievalConfig { n_hybrid, ..Default::default() };
        let fused = rrf_fuse(&dense, &sparse, &cfg).unwrap();
        let want = rrf_direct(&dense, &sparse, 60.0);
        prop_assert_eq!(fused.len(), want.len().min(n_hybrid));
        for (f, w) in fused.iter().zip(&want) {
            prop_assert_eq!(&f.chunk_id, &w.0);
            prop_assert!((f.rrf_score - w.1).abs() < 1e-12);
            prop_assert!(f.rrf_score <= 2.0 / 61.0 + 1e-15);
        }
        // Swapping the lists leaves scores unchanged.
        let swapped = rrf_fuse(&sparse, &dense, &cfg).unwrap();
        for (a, b) in fused.iter().zip(&swapped) {
            prop_assert_eq!(&a.chunk_id, &b.chunk_id);
            prop_assert!((a.rrf_score - b.rrf_score).abs() < 1e-15);
        }
    }

    #[test]
    fn rouge_bounds_and_identity(
        reference in prop::collection::vec("[a-d]{1,2}( [a-d]{1,2}){0,6}", 1..4),
        candidate in prop::collection::vec("[a-d]{1,2}( [a-d]{1,2}){0,6}", 1..4),
    ) {
        let r = reference.join("\n");
        let c = candidate.join("\n");
        let s = rouge_lsum(&r, &c);
        prop_assert!((0.0..=1.0).contains(&s.precision));
        prop_assert!((0.0..=1.0).contains(&s.recall));
        prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);

        let same = rouge_lsum(&r, &r);
        prop_assert!((same.recall - 1.0).abs() < 1e-12 && (same.precision - 1.0).abs() < 1e-12);

        let mut reversed = candidate.clone();
        reversed.reverse();
        let t = rouge_lsum(&r, &reversed.join("\n"));
        prop_assert!((t.recall - s.recall).abs() < 1e-12);
        prop_assert!((t.precision - s.precision).abs() < 1e-12);
    }

    #[test]
    fn rouge_single_sentence_is_lcs(reference in "[a-e]( [a-e]){0,12}", candidate in "[a-e]( [a-e]){0,12}") {
        let s = rouge_lsum(&reference, &candidate);
        let (p, r) = rouge_l_single(&simple_tokenize(&reference), &simple_tokenize(&candidate));
        prop_assert!((s.precision - p).abs() < 1e-9);
        prop_assert!((s.recall - r).abs() < 1e-9);
    }

    #[test]
    fn dense_matches_brute_force_cosine(seed in any::<u64>(), d in 2usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (chunks, vocab) = random_corpus(&mut rng, 40, 25);
        let e = HashEmbedder::new(d).unwrap();
        let index = build_dense(&chunks, &e).unwrap();
        let q = random_query(&mut rng, &vocab);
        let got = search_dense(&index, &q, &e, chunks.len()).unwrap();

        let counts = |text: &str| {
            let mut v = vec![0.0f64; d];
            for t in hybridqa::tokenize(text) {
                v[e.bucket(&t)] += 1.0;
            }
            v
        };
        let qv = counts(&q);
        let cos = |a: &[f64], b: &[f64]| {
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
        };
        let mut want: Vec<(String, f64)> = chunks.iter().map(|c| (c.chunk_id.clone(), cos(&counts(&c.text), &qv))).collect();
        want.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g.score - w.1).abs() < 1e-9);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&g.score));
        }
        for i in 0..index.matrix.len().min(5) {
            for j in 0..index.matrix.len().min(5) {
                prop_assert!((dot(&index.matrix[i], &index.matrix[j]) - dot(&index.matrix[j], &index.matrix[i])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prompt_sections_in_order(
        history in prop::collection::vec(("[a-z]{1,8}", "[a-z]{1,8}"), 0..3),
        blocks in prop::collection::vec("[a-z]{1,12}", 0..4),
        abbr in "([A-Z]{2,4} is usually short for [a-z]{3,8}\\.)?",
        query in "[a-z]{1,10}",
    ) {
        let history: Vec<HistoryTurn> = history.into_iter().map(|(q, a)| HistoryTurn { question: q, answer: a }).collect();
        let chunks: Vec<_> = blocks.iter().enumerate().map(|(i, t)| chunk(&format!("c{i}#0000"), t)).collect();
        let bundle = build_prompt(&query, &chunks, &abbr, &history, "sys").unwrap();
        let text = bundle.render();
        let mut last = 0;
        for (label, present) in [
            (SYSTEM_LABEL, true),
            (HISTORY_LABEL, !history.is_empty()),
            (CONTEXT_LABEL, !blocks.is_empty()),
            (ABBREVIATIONS_LABEL, !abbr.is_empty()),
            (QUESTION_LABEL, true),
        ] {
            match text.find(label) {
                Some(pos) => {
                    prop_assert!(present);
                    prop_assert!(pos >= last);
                    last = pos;
                }
                None => prop_assert!(!present),
            }
        }
        let mut pos = text.find(CONTEXT_LABEL).unwrap_or(0);
        for b in &blocks {
            let at = text[pos..].find(b.as_str()).map(|p| p + pos);
            prop_assert!(at.is_some());
            pos = at.unwrap() + b.len();
        }
        let ids = bundle.sources();
        let want: Vec<String> = chunks.iter().rev().map(|c| c.chunk_id.clone()).collect();
        prop_assert_eq!(ids, want);
    }

    #[test]
    fn truncation_is_idempotent(
        history in prop::collection::vec("[a-z]{1,6}( [a-z]{1,6}){0,8}", 0..4),
        blocks in prop::collection::vec("[a-z]{1,6}( [a-z]{1,6}){0,20}", 0..4),
        budget in 10usize..80,
    ) {
        let history: Vec<HistoryTurn> = history.into_iter().map(|h| HistoryTurn { question: h.clone(), answer: h }).collect();
        let chunks: Vec<_> = blocks.iter().enumerate().map(|(i, t)| chunk(&format!("c{i}#0000"), t)).collect();
        let bundle = build_prompt("what is it", &chunks, "X is usually short for y.", &history, "be brief").unwrap();
        let cfg = GenerationConfig { context_length: budget + 1, max_new_tokens: 1, backend: BackendKind::StubEcho };
        if let Ok(once) = truncate_to_budget(&bundle, &cfg, &WhitespaceCounter) {
            let twice = truncate_to_budget(&once, &cfg, &WhitespaceCounter).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(&once.system_prompt, &bundle.system_prompt);
            prop_assert_eq!(&once.abbreviation_block, &bundle.abbreviation_block);
            prop_assert_eq!(&once.query, &bundle.query);
            prop_assert!(bundle.context_blocks.ends_with(&once.context_blocks));
            prop_assert!(bundle.history.ends_with(&once.history));
        }
    }
}
