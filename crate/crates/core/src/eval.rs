//! Evaluation harness: discriminativeness under an evaluative listener,
//! discriminativeness per character, and ROUGE against gold summaries.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composer::{PerDocSummary, SummaryBundle};
use crate::corpus::SubmissionGroup;
use crate::likelihood::{cosine, TfidfModel};
use crate::segmenter::CandidateSet;
use crate::text::{char_len, tokenize};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("expected {expected} summaries, got {got}")]
    SummaryCount { expected: usize, got: usize },
    #[error("external_vectors similarity requires a vectors file")]
    MissingVectors,
    #[error("no vector for text id {0:?}")]
    MissingVector(String),
    #[error("vector dimension mismatch for {0:?}")]
    Dimension(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("vectors line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Dense vectors keyed by text id, from `<text_id>\t<v_1>\t…\t<v_D>` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorTable {
    vectors: HashMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn parse(raw: &str) -> Result<Self, EvalError> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cells = line.split('\t');
            let id = cells.next().unwrap_or_default().to_string();
            let v = cells
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| EvalError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if v.is_empty() || *dim.get_or_insert(v.len()) != v.len() {
                return Err(EvalError::Parse {
                    line: i + 1,
                    message: "inconsistent vector dimension".into(),
                });
            }
            vectors.insert(id, v);
        }
        Ok(Self { vectors })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let raw = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&raw)
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<f64>) {
        self.vectors.insert(id.into(), v);
    }

    fn get(&self, id: &str) -> Result<&[f64], EvalError> {
        self.vectors
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| EvalError::MissingVector(id.to_string()))
    }
}

/// Text id of a review in an external vectors file.
pub fn review_vector_id(submission_id: &str, doc_id: &str) -> String {
    format!("{submission_id}/{doc_id}")
}

/// Text id of the summary written for a review.
pub fn summary_vector_id(submission_id: &str, doc_id: &str) -> String {
    format!("{submission_id}/{doc_id}/summary")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Similarity {
    TfidfCosine,
    ExternalVectors(Option<VectorTable>),
}

/// For each summary, whether the evaluative listener's argmax over reviews is
/// its own review. Ties count as failures.
pub fn listener_successes<S: AsRef<str>>(
    summaries: &[S],
    group: &SubmissionGroup,
    similarity: &Similarity,
) -> Result<Vec<bool>, EvalError> {
    if summaries.len() != group.len() {
        return Err(EvalError::SummaryCount {
            expected: group.len(),
            got: summaries.len(),
        });
    }
    let sims: Vec<Vec<f64>> = match similarity {
        Similarity::TfidfCosine => {
            let texts: Vec<&str> = group.documents.iter().map(|d| d.text.as_str()).collect();
            let model = TfidfModel::fit(&texts);
            let reviews: Vec<Vec<f64>> = texts.iter().map(|t| model.vectorize(t)).collect();
            summaries
                .iter()
                .map(|s| {
                    let v = model.vectorize(s.as_ref());
                    reviews.iter().map(|r| cosine(&v, r)).collect()
                })
                .collect()
        }
        Similarity::ExternalVectors(None) => return Err(EvalError::MissingVectors),
        Similarity::ExternalVectors(Some(table)) => {
            let sid = &group.submission_id;
            let reviews = group
                .documents
                .iter()
                .map(|d| table.get(&review_vector_id(sid, &d.id)))
                .collect::<Result<Vec<_>, _>>()?;
            group
                .documents
                .iter()
                .map(|d| {
                    let id = summary_vector_id(sid, &d.id);
                    let v = table.get(&id)?;
                    if reviews.iter().any(|r| r.len() != v.len()) {
                        return Err(EvalError::Dimension(id));
                    }
                    Ok(reviews.iter().map(|r| cosine(v, r)).collect())
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(summaries
        .iter()
        .zip(&sims)
        .enumerate()
        .map(|(d, (summary, row))| {
            !summary.as_ref().trim().is_empty()
                && row.iter().enumerate().all(|(o, &v)| o == d || row[d] > v)
        })
        .collect())
}

/// Fraction of summaries whose source review the evaluative listener recovers.
pub fn discriminativeness<S: AsRef<str>>(
    summaries: &[S],
    group: &SubmissionGroup,
    similarity: &Similarity,
) -> Result<f64, EvalError> {
    let hits = listener_successes(summaries, group, similarity)?;
    if hits.is_empty() {
        return Ok(0.0);
    }
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RougeVariant {
    R1,
    R2,
    RL,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_overlap(overlap: usize, cand_total: usize, ref_total: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(overlap, cand_total);
        let recall = ratio(overlap, ref_total);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_default() += 1;
        }
    }
    counts
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-1, ROUGE-2 (clipped n-gram overlap) or ROUGE-L (longest common
/// subsequence), on lowercase alphanumeric tokens without stemming.
pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> RougeScore {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    if c.is_empty() || r.is_empty() {
        log::warn!("ROUGE on an empty token list; scoring zero");
        return RougeScore::default();
    }
    match variant {
        RougeVariant::R1 | RougeVariant::R2 => {
            let n = if variant == RougeVariant::R1 { 1 } else { 2 };
            let cc = ngram_counts(&c, n);
            let rc = ngram_counts(&r, n);
            let overlap = cc
                .iter()
                .map(|(g, &k)| k.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            RougeScore::from_overlap(overlap, cc.values().sum(), rc.values().sum())
        }
        RougeVariant::RL => RougeScore::from_overlap(lcs_len(&c, &r), c.len(), r.len()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeSet {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

impl RougeSet {
    pub fn compute(candidate: &str, reference: &str) -> Self {
        Self {
            rouge1: rouge(candidate, reference, RougeVariant::R1),
            rouge2: rouge(candidate, reference, RougeVariant::R2),
            rouge_l: rouge(candidate, reference, RougeVariant::RL),
        }
    }

    fn named(&self) -> [(&'static str, RougeScore); 3] {
        [
            ("rouge1", self.rouge1),
            ("rouge2", self.rouge2),
            ("rougeL", self.rouge_l),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionEval {
    pub submission_id: String,
    pub n_docs: usize,
    pub discriminativeness: f64,
    pub disc_per_char: f64,
    pub mean_summary_chars: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_speaker: Option<RougeSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_unique: Option<RougeSet>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            count: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_submissions: usize,
    pub discriminativeness: Stat,
    pub disc_per_char: Stat,
    /// Keys like `unique.rouge1.f1`; only present when some submission had a gold summary.
    pub rouge: BTreeMap<String, Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_submission: Vec<SubmissionEval>,
    pub aggregate: Aggregate,
}

/// Mean character length of the summaries, and discriminativeness divided by it.
pub fn per_char(disc: f64, summaries: &[&str]) -> (f64, f64) {
    if summaries.is_empty() {
        return (0.0, 0.0);
    }
    let mean = summaries.iter().map(|s| char_len(s) as f64).sum::<f64>() / summaries.len() as f64;
    let per = if mean > 0.0 { disc / mean } else { 0.0 };
    (mean, per)
}

pub fn evaluate_submission(
    bundle: &SummaryBundle,
    group: &SubmissionGroup,
    similarity: &Similarity,
) -> Result<SubmissionEval, EvalError> {
    let texts: Vec<&str> = bundle.per_doc.iter().map(|p| p.text.as_str()).collect();
    let disc = discriminativeness(&texts, group, similarity)?;
    let (mean_chars, disc_per_char) = per_char(disc, &texts);
    let gold = group
        .gold_summary
        .as_deref()
        .filter(|g| !g.trim().is_empty());
    let rouge_for = |m: &Option<crate::composer::MdsSummary>| {
        gold.zip(m.as_ref())
            .map(|(g, m)| RougeSet::compute(&m.text, g))
    };
    Ok(SubmissionEval {
        submission_id: group.submission_id.clone(),
        n_docs: group.len(),
        discriminativeness: disc,
        disc_per_char,
        mean_summary_chars: mean_chars,
        rouge_speaker: rouge_for(&bundle.mds_speaker),
        rouge_unique: rouge_for(&bundle.mds_unique),
    })
}

pub fn aggregate(per_submission: &[SubmissionEval]) -> Aggregate {
    let collect =
        |f: &dyn Fn(&SubmissionEval) -> f64| per_submission.iter().map(f).collect::<Vec<_>>();
    let mut rouge: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in per_submission {
        for (variant, set) in [("speaker", &s.rouge_speaker), ("unique", &s.rouge_unique)] {
            let Some(set) = set else { continue };
            for (name, score) in set.named() {
                for (part, v) in [
                    ("precision", score.precision),
                    ("recall", score.recall),
                    ("f1", score.f1),
                ] {
                    rouge
                        .entry(format!("{variant}.{name}.{part}"))
                        .or_default()
                        .push(v);
                }
            }
        }
    }
    Aggregate {
        n_submissions: per_submission.len(),
        discriminativeness: Stat::of(&collect(&|s| s.discriminativeness)),
        disc_per_char: Stat::of(&collect(&|s| s.disc_per_char)),
        rouge: rouge.into_iter().map(|(k, v)| (k, Stat::of(&v))).collect(),
    }
}

pub fn evaluate(
    items: &[(&SummaryBundle, &SubmissionGroup)],
    similarity: &Similarity,
) -> Result<EvalReport, EvalError> {
    let per_submission = items
        .iter()
        .map(|(b, g)| evaluate_submission(b, g, similarity))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = aggregate(&per_submission);
    Ok(EvalReport {
        per_submission,
        aggregate,
    })
}

const CSV_VARIANTS: [&str; 2] = ["speaker", "unique"];
const CSV_METRICS: [&str; 3] = ["rouge1", "rouge2", "rougeL"];
const CSV_PARTS: [&str; 3] = ["precision", "recall", "f1"];

/// One row per submission; ROUGE cells are empty when no gold summary exists.
pub fn report_csv(report: &EvalReport) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "submission_id".to_string(),
        "n_docs".into(),
        "discriminativeness".into(),
        "disc_per_char".into(),
        "mean_summary_chars".into(),
    ];
    for v in CSV_VARIANTS {
        for m in CSV_METRICS {
            for p in CSV_PARTS {
                header.push(format!("{v}.{m}.{p}"));
            }
        }
    }
    w.write_record(&header)?;
    for s in &report.per_submission {
        let mut row = vec![
            s.submission_id.clone(),
            s.n_docs.to_string(),
            s.discriminativeness.to_string(),
            s.disc_per_char.to_string(),
            s.mean_summary_chars.to_string(),
        ];
        for set in [&s.rouge_speaker, &s.rouge_unique] {
            match set {
                Some(x) => {
                    for (_, score) in x.named() {
                        row.extend(
                            [score.precision, score.recall, score.f1].map(|v| v.to_string()),
                        );
                    }
                }
                None => row.extend(std::iter::repeat_n(String::new(), 9)),
            }
        }
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| EvalError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// The random comparator: every document gets one candidate drawn uniformly
/// from the whole group's candidate pool.
pub fn random_per_doc<R: Rng + ?Sized>(
    group: &SubmissionGroup,
    cands: &CandidateSet,
    rng: &mut R,
) -> Vec<PerDocSummary> {
    group
        .documents
        .iter()
        .map(|doc| {
            if cands.is_empty() {
                return PerDocSummary {
                    doc_id: doc.id.clone(),
                    doc_index: doc.index,
                    candidate_ids: vec![],
                    text: String::new(),
                };
            }
            let c = &cands.candidates[rng.gen_range(0..cands.len())];
            PerDocSummary {
                doc_id: doc.id.clone(),
                doc_index: doc.index,
                candidate_ids: vec![c.id.clone()],
                text: crate::text::collapse_whitespace(&c.text),
            }
        })
        .collect()
}
