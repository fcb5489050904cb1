//! Truth matrices: how plausible each candidate is as a summary of each document.
//!
//! Values are log-likelihoods (nats). Two self-contained scorers are provided;
//! scores from a real summarization model can be imported from TSV instead.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{load_matrix, MatrixError, SubmissionGroup};
use crate::segmenter::CandidateSet;
use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum LikelihoodError {
    #[error("matrix shape: {0}")]
    Shape(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid scorer config: {0}")]
    InvalidConfig(String),
    #[error("empty document group or candidate set")]
    EmptyInput,
    #[error("matrix ids do not match the corpus: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// N×K grid of log-likelihoods, rows are documents and columns candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthMatrix {
    doc_ids: Vec<String>,
    cand_ids: Vec<String>,
    values: Vec<f64>,
}

impl TruthMatrix {
    pub fn new(
        doc_ids: Vec<String>,
        cand_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, LikelihoodError> {
        if doc_ids.is_empty() || cand_ids.is_empty() {
            return Err(LikelihoodError::Shape(
                "need at least one document and one candidate".into(),
            ));
        }
        if rows.len() != doc_ids.len() {
            return Err(LikelihoodError::Shape(format!(
                "{} rows for {} documents",
                rows.len(),
                doc_ids.len()
            )));
        }
        let k = cand_ids.len();
        let mut values = Vec::with_capacity(rows.len() * k);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(LikelihoodError::Shape(format!(
                    "row {r} has {} values for {k} candidates",
                    row.len()
                )));
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(LikelihoodError::NonFinite { row: r, col: c });
            }
            values.extend(row);
        }
        Ok(Self {
            doc_ids,
            cand_ids,
            values,
        })
    }

    /// Build from linear-space likelihoods in `(0, ∞)`; convenient for small hand examples.
    pub fn from_linear(
        doc_ids: Vec<String>,
        cand_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, LikelihoodError> {
        let logs = rows
            .into_iter()
            .map(|r| r.into_iter().map(f64::ln).collect())
            .collect();
        Self::new(doc_ids, cand_ids, logs)
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_cands(&self) -> usize {
        self.cand_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn cand_ids(&self) -> &[String] {
        &self.cand_ids
    }

    pub fn get(&self, doc: usize, cand: usize) -> f64 {
        self.values[doc * self.n_cands() + cand]
    }

    pub fn row(&self, doc: usize) -> &[f64] {
        let k = self.n_cands();
        &self.values[doc * k..(doc + 1) * k]
    }

    pub fn column(&self, cand: usize) -> Vec<f64> {
        (0..self.n_docs()).map(|d| self.get(d, cand)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_docs()).map(|d| self.row(d).to_vec()).collect()
    }

    /// Reorder rows and columns to the given id orders. Both id sets must match exactly.
    pub fn aligned(
        &self,
        doc_ids: &[String],
        cand_ids: &[String],
    ) -> Result<Self, LikelihoodError> {
        let mut problems = Vec::new();
        describe_mismatch("document", &self.doc_ids, doc_ids, &mut problems);
        describe_mismatch("candidate", &self.cand_ids, cand_ids, &mut problems);
        if !problems.is_empty() {
            return Err(LikelihoodError::IdMismatch(problems.join("; ")));
        }
        let row_of: HashMap<&str, usize> = self
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i))
            .collect();
        let col_of: HashMap<&str, usize> = self
            .cand_ids
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let rows = doc_ids
            .iter()
            .map(|d| {
                let r = row_of[d.as_str()];
                cand_ids
                    .iter()
                    .map(|c| self.get(r, col_of[c.as_str()]))
                    .collect()
            })
            .collect();
        Self::new(doc_ids.to_vec(), cand_ids.to_vec(), rows)
    }
}

fn describe_mismatch(kind: &str, found: &[String], expected: &[String], out: &mut Vec<String>) {
    let found_set: BTreeSet<&str> = found.iter().map(String::as_str).collect();
    let expected_set: BTreeSet<&str> = expected.iter().map(String::as_str).collect();
    if found_set.len() != found.len() {
        out.push(format!("duplicate {kind} ids in matrix"));
    }
    let missing: Vec<&str> = expected_set.difference(&found_set).copied().collect();
    let extra: Vec<&str> = found_set.difference(&expected_set).copied().collect();
    if !missing.is_empty() {
        out.push(format!("missing {kind} ids {missing:?}"));
    }
    if !extra.is_empty() {
        out.push(format!("unexpected {kind} ids {extra:?}"));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    UnigramLm,
    TfidfCosine,
    External,
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unigram_lm" | "unigram" => Ok(ScorerKind::UnigramLm),
            "tfidf_cosine" | "tfidf" => Ok(ScorerKind::TfidfCosine),
            "external" => Ok(ScorerKind::External),
            other => Err(format!("unknown scorer kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    /// Additive smoothing for the unigram scorer.
    pub smoothing_alpha: f64,
    /// Lower bound applied to every entry.
    pub floor_logprob: f64,
    /// Every log-score is divided by this before flooring.
    pub temperature: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            kind: ScorerKind::UnigramLm,
            smoothing_alpha: 0.1,
            floor_logprob: -18.0,
            temperature: 1.0,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<(), LikelihoodError> {
        if !(self.smoothing_alpha > 0.0 && self.smoothing_alpha.is_finite()) {
            return Err(LikelihoodError::InvalidConfig(
                "smoothing_alpha must be > 0".into(),
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(LikelihoodError::InvalidConfig(
                "temperature must be > 0".into(),
            ));
        }
        if !self.floor_logprob.is_finite() {
            return Err(LikelihoodError::InvalidConfig(
                "floor_logprob must be finite".into(),
            ));
        }
        Ok(())
    }

    fn finish(&self, raw: f64) -> f64 {
        (raw / self.temperature).max(self.floor_logprob)
    }
}

/// A matrix plus anything noteworthy that happened while computing it.
#[derive(Debug, Clone)]
pub struct Scored {
    pub matrix: TruthMatrix,
    pub warnings: Vec<String>,
}

/// Dispatch to the built-in scorer named by `cfg.kind`.
pub fn score(
    group: &SubmissionGroup,
    cands: &CandidateSet,
    cfg: &ScorerConfig,
) -> Result<Scored, LikelihoodError> {
    match cfg.kind {
        ScorerKind::UnigramLm => score_unigram(group, cands, cfg),
        ScorerKind::TfidfCosine => score_tfidf(group, cands, cfg),
        ScorerKind::External => Err(LikelihoodError::InvalidConfig(
            "external scorer needs a matrix file".into(),
        )),
    }
}

/// Mean per-token log-probability of each candidate under an add-α unigram
/// model of each document. The vocabulary is every token in the group's
/// documents and candidates.
pub fn score_unigram(
    group: &SubmissionGroup,
    cands: &CandidateSet,
    cfg: &ScorerConfig,
) -> Result<Scored, LikelihoodError> {
    cfg.validate()?;
    if group.is_empty() || cands.is_empty() {
        return Err(LikelihoodError::EmptyInput);
    }
    let doc_tokens: Vec<Vec<String>> = group.documents.iter().map(|d| tokenize(&d.text)).collect();
    let cand_tokens: Vec<Vec<String>> =
        cands.candidates.iter().map(|c| tokenize(&c.text)).collect();
    let vocab: BTreeSet<&str> = doc_tokens
        .iter()
        .chain(&cand_tokens)
        .flatten()
        .map(String::as_str)
        .collect();
    let vocab_size = vocab.len() as f64;

    let mut warnings = Vec::new();
    for (s, toks) in cand_tokens.iter().enumerate() {
        if toks.is_empty() {
            warnings.push(format!(
                "candidate {} has no tokens; scored at the floor",
                cands.candidates[s].id
            ));
        }
    }

    let rows = doc_tokens
        .iter()
        .map(|toks| {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for t in toks {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            let denom = (toks.len() as f64 + cfg.smoothing_alpha * vocab_size).ln();
            cand_tokens
                .iter()
                .map(|ct| {
                    if ct.is_empty() {
                        return cfg.floor_logprob;
                    }
                    let total: f64 = ct
                        .iter()
                        .map(|t| {
                            let c = counts.get(t.as_str()).copied().unwrap_or(0) as f64;
                            (c + cfg.smoothing_alpha).ln() - denom
                        })
                        .sum();
                    cfg.finish(total / ct.len() as f64)
                })
                .collect()
        })
        .collect();

    let matrix = TruthMatrix::new(group.doc_ids(), cands.ids(), rows)?;
    Ok(Scored { matrix, warnings })
}

/// TF-IDF vector space fitted on a set of documents.
///
/// Term frequencies are raw counts; idf is `ln((1 + N) / (1 + df)) + 1`.
/// Tokens outside the fitted vocabulary are ignored.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    vocab: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(documents: &[S]) -> Self {
        let mut vocab: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        for doc in documents {
            let distinct: BTreeSet<String> = tokenize(doc.as_ref()).into_iter().collect();
            for t in distinct {
                let next = vocab.len();
                let idx = *vocab.entry(t).or_insert(next);
                if idx == df.len() {
                    df.push(0);
                }
                df[idx] += 1;
            }
        }
        let n = documents.len() as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Self { vocab, idf }
    }

    pub fn vocab_len(&self) -> usize {
        self.idf.len()
    }

    pub fn vectorize(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.idf.len()];
        for t in tokenize(text) {
            if let Some(&i) = self.vocab.get(&t) {
                v[i] += 1.0;
            }
        }
        for (x, w) in v.iter_mut().zip(&self.idf) {
            *x *= w;
        }
        v
    }
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// `ln(ε + cos)` with ε = exp(floor) and the cosine clipped to `[0, 1]`,
/// using TF-IDF weights fitted on the group's documents.
pub fn score_tfidf(
    group: &SubmissionGroup,
    cands: &CandidateSet,
    cfg: &ScorerConfig,
) -> Result<Scored, LikelihoodError> {
    cfg.validate()?;
    if group.is_empty() || cands.is_empty() {
        return Err(LikelihoodError::EmptyInput);
    }
    let texts: Vec<&str> = group.documents.iter().map(|d| d.text.as_str()).collect();
    let model = TfidfModel::fit(&texts);
    let doc_vecs: Vec<Vec<f64>> = texts.iter().map(|t| model.vectorize(t)).collect();
    let cand_vecs: Vec<Vec<f64>> = cands
        .candidates
        .iter()
        .map(|c| model.vectorize(&c.text))
        .collect();
    let eps = cfg.floor_logprob.exp();

    let mut warnings = Vec::new();
    for (c, v) in cands.candidates.iter().zip(&cand_vecs) {
        if v.iter().all(|&x| x == 0.0) {
            warnings.push(format!("candidate {} has no in-vocabulary tokens", c.id));
        }
    }
    let rows = doc_vecs
        .iter()
        .map(|dv| {
            cand_vecs
                .iter()
                .map(|cv| cfg.finish((eps + cosine(dv, cv).clamp(0.0, 1.0)).ln()))
                .collect()
        })
        .collect();
    let matrix = TruthMatrix::new(group.doc_ids(), cands.ids(), rows)?;
    Ok(Scored { matrix, warnings })
}

/// Load a matrix produced offline and align it to the group and candidate order.
pub fn score_external(
    path: &Path,
    group: &SubmissionGroup,
    cands: &CandidateSet,
) -> Result<Scored, LikelihoodError> {
    let raw = load_matrix(path)?;
    let matrix = raw.aligned(&group.doc_ids(), &cands.ids())?;
    Ok(Scored {
        matrix,
        warnings: Vec::new(),
    })
}
