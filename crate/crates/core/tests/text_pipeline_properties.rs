use glimpse_core::corpus::{matrix_from_tsv, matrix_to_tsv, parse_json_lines, SubmissionGroup};
use glimpse_core::eval::{
    discriminativeness, per_char, random_per_doc, rouge, RougeVariant, Similarity,
};
use glimpse_core::likelihood::{score_unigram, ScorerConfig, TruthMatrix};
use glimpse_core::segmenter::{extract_candidates, SegmenterConfig};
use glimpse_core::text::{char_slice, dedup_key};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "the",
    "model",
    "results",
    "paper",
    "is",
    "novel",
    "weak",
    "baseline",
    "clear",
    "proof",
    "data",
    "we",
    "method",
    "section",
    "strong",
    "unclear",
    "experiments",
    "writing",
];

fn sentence() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(prop::sample::select(WORDS), 3..9),
        prop::sample::select(vec![".", "!", "?"]),
    )
        .prop_map(|(words, end)| {
            let mut s = words.join(" ");
            s[..1].make_ascii_uppercase();
            s + end
        })
}

fn document() -> impl Strategy<Value = String> {
    prop::collection::vec(sentence(), 1..6).prop_map(|s| s.join(" "))
}

fn group_of(docs: &[String]) -> SubmissionGroup {
    SubmissionGroup::from_texts(
        "s",
        docs.iter()
            .enumerate()
            .map(|(i, t)| (format!("d{i}"), t.as_str())),
    )
}

fn loose() -> SegmenterConfig {
    SegmenterConfig {
        min_chars: 1,
        ..SegmenterConfig::default()
    }
}

proptest! {
    #[test]
    fn extraction_is_deterministic(docs in prop::collection::vec(document(), 1..5)) {
        let g = group_of(&docs);
        let a = extract_candidates(&g, &loose()).unwrap();
        let b = extract_candidates(&g, &loose()).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn spans_are_disjoint_and_read_back(docs in prop::collection::vec(document(), 1..5)) {
        let g = group_of(&docs);
        let set = extract_candidates(&g, &loose()).unwrap();
        let mut keys = std::collections::HashSet::new();
        for c in &set.candidates {
            prop_assert!(keys.insert(dedup_key(&c.text)));
            prop_assert_eq!(c.length_chars, c.text.chars().count());
        }
        for doc in &g.documents {
            let mut spans: Vec<(usize, usize)> = set.candidates.iter()
                .flat_map(|c| c.sources.iter())
                .filter(|s| s.doc_index == doc.index)
                .map(|s| (s.start, s.end))
                .collect();
            spans.sort();
            for w in spans.windows(2) {
                prop_assert!(w[0].1 <= w[1].0);
            }
        }
        for c in &set.candidates {
            for s in &c.sources {
                let slice = char_slice(&g.documents[s.doc_index].text, s.start, s.end);
                prop_assert_eq!(dedup_key(slice), dedup_key(&c.text));
            }
        }
        // Ordering by (first source document, span start).
        let order: Vec<(usize, usize)> = set.candidates.iter().map(|c| (c.sources[0].doc_index, c.sources[0].start)).collect();
        let mut sorted = order.clone();
        sorted.sort();
        prop_assert_eq!(order, sorted);
    }

    #[test]
    fn duplicated_document_doubles_sources(docs in prop::collection::vec(document(), 1..4)) {
        let g = group_of(&docs);
        let mut doubled_docs = docs.clone();
        doubled_docs.push(docs[0].clone());
        let doubled = group_of(&doubled_docs);
        let a = extract_candidates(&g, &loose()).unwrap();
        let b = extract_candidates(&doubled, &loose()).unwrap();
        let texts = |s: &glimpse_core::CandidateSet| s.candidates.iter().map(|c| c.text.clone()).collect::<Vec<_>>();
        prop_assert_eq!(texts(&a), texts(&b));
        let last = doubled.len() - 1;
        for (ca, cb) in a.candidates.iter().zip(&b.candidates) {
            let from_first = ca.sources.iter().filter(|s| s.doc_index == 0).count();
            let extra = cb.sources.iter().filter(|s| s.doc_index == last).count();
            prop_assert_eq!(from_first, extra);
            prop_assert_eq!(cb.sources.len(), ca.sources.len() + from_first);
        }
    }

    #[test]
    fn unigram_rows_follow_document_permutation(docs in prop::collection::vec(document(), 2..5)) {
        let g = group_of(&docs);
        let cands = extract_candidates(&g, &loose()).unwrap();
        let m = score_unigram(&g, &cands, &ScorerConfig::default()).unwrap().matrix;
        let mut reversed_docs = docs.clone();
        reversed_docs.reverse();
        let rg = SubmissionGroup::from_texts("s", reversed_docs.iter().enumerate().map(|(i, t)| (format!("d{}", docs.len() - 1 - i), t.as_str())));
        let rm = score_unigram(&rg, &cands, &ScorerConfig::default()).unwrap().matrix;
        let n = docs.len();
        for d in 0..n {
            prop_assert_eq!(m.row(d), rm.row(n - 1 - d));
        }
    }

    #[test]
    fn identical_document_adds_identical_row(docs in prop::collection::vec(document(), 1..4)) {
        let mut with_copy = docs.clone();
        with_copy.push(docs[0].clone());
        let g = group_of(&with_copy);
        let cands = extract_candidates(&g, &loose()).unwrap();
        let m = score_unigram(&g, &cands, &ScorerConfig::default()).unwrap().matrix;
        prop_assert_eq!(m.row(0), m.row(with_copy.len() - 1));
    }

    #[test]
    fn tsv_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..5)) {
        let n = rows.len();
        let m = TruthMatrix::new((0..n).map(|i| format!("doc {i}")).collect(), vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let back = matrix_from_tsv(&matrix_to_tsv(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn loaded_indices_are_a_bijection(sizes in prop::collection::vec(1usize..6, 1..4)) {
        let mut lines = Vec::new();
        for (s, &size) in sizes.iter().enumerate() {
            for d in 0..size {
                lines.push(format!(r#"{{"id":"r{d}","submission_id":"s{s}","text":"text {d}"}}"#));
            }
        }
        let groups = parse_json_lines(&lines.join("\n")).unwrap();
        prop_assert_eq!(groups.len(), sizes.len());
        for (g, &size) in groups.iter().zip(&sizes) {
            let idx: Vec<usize> = g.documents.iter().map(|d| d.index).collect();
            prop_assert_eq!(idx, (0..size).collect::<Vec<_>>());
        }
    }

    #[test]
    fn rouge1_precision_recall_swap(a in prop::collection::vec(prop::sample::select(WORDS), 1..12),
                                    b in prop::collection::vec(prop::sample::select(WORDS), 1..12)) {
        let (a, b) = (a.join(" "), b.join(" "));
        let ab = rouge(&a, &b, RougeVariant::R1);
        let ba = rouge(&b, &a, RougeVariant::R1);
        prop_assert_eq!(ab.precision, ba.recall);
        for v in [RougeVariant::R1, RougeVariant::R2, RougeVariant::RL] {
            let r = rouge(&a, &b, v);
            for x in [r.precision, r.recall, r.f1] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}

fn distinct_reviews(n: usize, offset: usize) -> Vec<String> {
    // Each review uses its own vocabulary, several sentences each.
    (0..n)
        .map(|d| {
            (0..4)
                .map(|s| {
                    format!("Review{d}x{offset} point{s} word{d}w{s} claim{d}c{s} detail{d}z{s}.")
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

#[test]
fn verbatim_copies_are_fully_discriminative() {
    let docs = distinct_reviews(5, 0);
    let g = group_of(&docs);
    assert_eq!(
        discriminativeness(&docs, &g, &Similarity::TfidfCosine).unwrap(),
        1.0
    );
}

#[test]
fn random_selection_approaches_one_over_n() {
    // Monte-Carlo oracle: 1000 trials of a random pick from the pooled sentences.
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total = 0.0;
    let trials = 1000;
    for t in 0..trials {
        let g = group_of(&distinct_reviews(n, t));
        let cands = extract_candidates(&g, &loose()).unwrap();
        let picks = random_per_doc(&g, &cands, &mut rng);
        let texts: Vec<&str> = picks.iter().map(|p| p.text.as_str()).collect();
        total += discriminativeness(&texts, &g, &Similarity::TfidfCosine).unwrap();
    }
    let mean = total / trials as f64;
    assert!((mean - 1.0 / n as f64).abs() <= 0.05, "mean {mean}");
}

#[test]
fn padding_lowers_disc_per_char() {
    let docs = distinct_reviews(3, 7);
    let g = group_of(&docs);
    let summaries: Vec<String> = docs
        .iter()
        .map(|d| d.split(". ").next().unwrap().to_string())
        .collect();
    let d0 = discriminativeness(&summaries, &g, &Similarity::TfidfCosine).unwrap();
    let refs: Vec<&str> = summaries.iter().map(String::as_str).collect();
    let (_, pc0) = per_char(d0, &refs);
    let padded: Vec<String> = summaries
        .iter()
        .map(|s| format!("{s} and so on and so forth"))
        .collect();
    let d1 = discriminativeness(&padded, &g, &Similarity::TfidfCosine).unwrap();
    let refs: Vec<&str> = padded.iter().map(String::as_str).collect();
    let (_, pc1) = per_char(d1, &refs);
    assert_eq!(d0, d1);
    assert!(pc1 < pc0);
}
