#![allow(dead_code)]

use glimpse_core::SubmissionGroup;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DOCS_PER_GROUP: usize = 4;
pub const TEMPLATES_PER_GROUP: usize = 5;

const SYLLABLES: [&str; 10] = ["ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "ve", "zu"];

/// A made-up word that is distinct for every index below 10^4.
pub fn word(i: usize) -> String {
    let mut n = i;
    let mut out = String::new();
    for _ in 0..4 {
        out.insert_str(0, SYLLABLES[n % 10]);
        n /= 10;
    }
    out
}

fn sentence(words: &[String]) -> String {
    let mut s = words.join(" ");
    s[..1].make_ascii_uppercase();
    s.push('.');
    s
}

/// Four reviews that share five template sentences, each with one planted
/// sentence of its own. Planted sentences draw from disjoint vocabularies and
/// have distinct word counts.
pub fn synthetic_group(index: usize) -> SubmissionGroup {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64);
    let mut templates: Vec<String> = Vec::new();
    while templates.len() < TEMPLATES_PER_GROUP {
        let len = rng.gen_range(6..=10);
        let words: Vec<String> = (0..len).map(|_| word(rng.gen_range(0..300))).collect();
        let s = sentence(&words);
        if !templates.contains(&s) {
            templates.push(s);
        }
    }
    let docs: Vec<(String, String)> = (0..DOCS_PER_GROUP)
        .map(|d| {
            let mut pool: Vec<usize> = (1000 + d * 500..1000 + (d + 1) * 500).collect();
            pool.shuffle(&mut rng);
            let planted: Vec<String> = pool[..4 + 3 * d].iter().map(|&i| word(i)).collect();
            let mut sentences = templates.clone();
            sentences.shuffle(&mut rng);
            let at = rng.gen_range(0..=sentences.len());
            sentences.insert(at, sentence(&planted));
            (format!("r{}", d + 1), sentences.join(" "))
        })
        .collect();
    SubmissionGroup::from_texts(
        &format!("syn{index:03}"),
        docs.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )
}

/// The same groups as JSON lines, in the corpus input format.
pub fn to_json_lines(groups: &[SubmissionGroup]) -> String {
    let mut out = String::new();
    for g in groups {
        for d in &g.documents {
            let mut rec =
                serde_json::json!({"id": d.id, "submission_id": g.submission_id, "text": d.text});
            if let Some(gold) = &g.gold_summary {
                rec["gold_summary"] = gold.clone().into();
            }
            out.push_str(&rec.to_string());
            out.push('\n');
        }
    }
    out
}

/// Neutral filler of exactly `n` characters, built from words absent from every review.
pub fn filler(n: usize) -> String {
    let words = ["and", "so", "on", "as", "noted", "above", "in", "brief"];
    let mut out = String::new();
    let mut i = 0;
    while out.chars().count() < n {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(words[i % words.len()]);
        i += 1;
    }
    out.chars().take(n).collect()
}
