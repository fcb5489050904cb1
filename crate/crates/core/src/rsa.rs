//! Rational Speech Act inference over a truth matrix.
//!
//! Documents play the role of referents and candidates the role of
//! utterances. The literal listener normalizes each truth-matrix column over
//! documents; each round the speaker softmaxes its utility over candidates and
//! the listener renormalizes the speaker over documents. All recursion is done
//! on log values with max-subtraction, probabilities are only produced for the
//! returned grids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::likelihood::TruthMatrix;
use crate::segmenter::CandidateSet;

/// Stand-in for `ln 0` when a probability grid contains exact zeros.
pub const LOG_ZERO_FLOOR: f64 = -745.0;

#[derive(Debug, Error)]
pub enum RsaError {
    #[error("invalid RSA config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("document index {0} out of range")]
    DocumentOutOfRange(usize),
    #[error("document {0:?} has no candidates of its own")]
    NoOwnCandidates(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsaConfig {
    /// Speaker/listener rounds after the literal listener. 0 returns the literal listener.
    pub iterations: usize,
    pub rationality_lambda: f64,
    /// Utility cost per candidate character.
    pub cost_per_char: f64,
    /// Keep a copy of every intermediate speaker and listener.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub record_trace: bool,
}

impl Default for RsaConfig {
    fn default() -> Self {
        Self {
            iterations: 2,
            rationality_lambda: 1.0,
            cost_per_char: 0.0,
            record_trace: false,
        }
    }
}

impl RsaConfig {
    pub fn validate(&self) -> Result<(), RsaError> {
        if !(self.rationality_lambda > 0.0 && self.rationality_lambda.is_finite()) {
            return Err(RsaError::InvalidConfig(
                "rationality_lambda must be > 0".into(),
            ));
        }
        if !(self.cost_per_char >= 0.0 && self.cost_per_char.is_finite()) {
            return Err(RsaError::InvalidConfig("cost_per_char must be >= 0".into()));
        }
        Ok(())
    }
}

/// Dense row-major grid with documents as rows and candidates as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, RsaError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(RsaError::Shape("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self, RsaError> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(RsaError::Shape("ragged columns".into()));
        }
        let mut g = Self::filled(rows, columns.len(), 0.0);
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                g.set(r, c, *v);
            }
        }
        Ok(g)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalize every column of a log grid so that its exponentials sum to one.
fn log_normalize_columns(g: &mut Grid) {
    for c in 0..g.cols {
        let z = log_sum_exp((0..g.rows).map(|r| g.get(r, c)));
        for r in 0..g.rows {
            g.set(r, c, g.get(r, c) - z);
        }
    }
}

fn log_normalize_rows(g: &mut Grid) {
    for r in 0..g.rows {
        let z = log_sum_exp(g.row(r).iter().copied());
        let cols = g.cols;
        for v in &mut g.data[r * cols..(r + 1) * cols] {
            *v -= z;
        }
    }
}

fn to_log(g: &Grid) -> Grid {
    g.map(|p| {
        if p > 0.0 {
            p.ln().max(LOG_ZERO_FLOOR)
        } else {
            LOG_ZERO_FLOOR
        }
    })
}

fn log_literal(matrix: &TruthMatrix) -> Grid {
    let mut g = Grid {
        rows: matrix.n_docs(),
        cols: matrix.n_cands(),
        data: matrix.rows().into_iter().flatten().collect(),
    };
    log_normalize_columns(&mut g);
    g
}

fn log_speaker(log_listener: &Grid, lengths: &[usize], cfg: &RsaConfig) -> Grid {
    let mut g = log_listener.clone();
    for r in 0..g.rows {
        for (c, &len) in lengths.iter().enumerate() {
            let utility = g.get(r, c) - cfg.cost_per_char * len as f64;
            g.set(r, c, cfg.rationality_lambda * utility);
        }
    }
    log_normalize_rows(&mut g);
    g
}

fn log_listener(log_speaker: &Grid) -> Grid {
    let mut g = log_speaker.clone();
    log_normalize_columns(&mut g);
    g
}

/// L0(d|s): each truth-matrix column normalized over documents.
pub fn literal_listener(matrix: &TruthMatrix) -> Grid {
    log_literal(matrix).map(f64::exp)
}

/// S_t(s|d): per document, softmax over candidates of
/// `λ · (ln L_{t-1}(d|s) − cost_per_char · len(s))`.
pub fn step_speaker(
    listener: &Grid,
    cands: &CandidateSet,
    cfg: &RsaConfig,
) -> Result<Grid, RsaError> {
    cfg.validate()?;
    if listener.n_cols() != cands.len() {
        return Err(RsaError::Shape(format!(
            "listener has {} columns for {} candidates",
            listener.n_cols(),
            cands.len()
        )));
    }
    Ok(log_speaker(&to_log(listener), &cands.lengths(), cfg).map(f64::exp))
}

/// L_t(d|s): each speaker column normalized over documents.
pub fn step_listener(speaker: &Grid) -> Grid {
    for c in 0..speaker.n_cols() {
        if speaker.column(c).iter().all(|&p| p <= 0.0) {
            log::warn!("speaker column {c} is all zero; listener column set to uniform");
        }
    }
    log_listener(&to_log(speaker)).map(f64::exp)
}

/// KL divergence (nats) of a listener column from the uniform distribution over its documents.
pub fn uniqueness_score(column: &[f64]) -> f64 {
    let n = column.len();
    if n <= 1 || column.iter().all(|&p| p == column[0]) {
        return 0.0;
    }
    let nf = n as f64;
    let kl: f64 = column
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * (nf * p).ln())
        .sum();
    kl.clamp(0.0, nf.ln())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub iteration: usize,
    pub speaker: Option<Grid>,
    pub listener: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsaResult {
    pub doc_ids: Vec<String>,
    pub cand_ids: Vec<String>,
    /// Final listener; column s is a distribution over documents.
    pub listener: Grid,
    /// Final speaker; row d is a distribution over candidates.
    pub speaker: Grid,
    pub uniqueness: Vec<f64>,
    pub speaker_argmax: Vec<usize>,
    pub config: RsaConfig,
    pub trace: Option<Vec<TraceStep>>,
}

impl RsaResult {
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_cands(&self) -> usize {
        self.cand_ids.len()
    }
}

/// Literal listener followed by `cfg.iterations` speaker/listener rounds.
///
/// With zero iterations the speaker is computed once from the literal
/// listener so that speaker-based selection is still defined.
pub fn run_rsa(
    matrix: &TruthMatrix,
    cands: &CandidateSet,
    cfg: &RsaConfig,
) -> Result<RsaResult, RsaError> {
    cfg.validate()?;
    if matrix.n_cands() != cands.len() {
        return Err(RsaError::Shape(format!(
            "matrix has {} columns for {} candidates",
            matrix.n_cands(),
            cands.len()
        )));
    }
    let lengths = cands.lengths();
    let mut listener = log_literal(matrix);
    let mut trace = cfg.record_trace.then(|| {
        vec![TraceStep {
            iteration: 0,
            speaker: None,
            listener: listener.map(f64::exp),
        }]
    });
    let mut speaker = log_speaker(&listener, &lengths, cfg);
    for t in 1..=cfg.iterations {
        if t > 1 {
            speaker = log_speaker(&listener, &lengths, cfg);
        }
        listener = log_listener(&speaker);
        if let Some(steps) = trace.as_mut() {
            steps.push(TraceStep {
                iteration: t,
                speaker: Some(speaker.map(f64::exp)),
                listener: listener.map(f64::exp),
            });
        }
    }
    let listener = listener.map(f64::exp);
    let speaker = speaker.map(f64::exp);
    let uniqueness = (0..listener.n_cols())
        .map(|c| uniqueness_score(&listener.column(c)))
        .collect();
    let speaker_argmax = (0..speaker.n_rows())
        .map(|r| argmax(speaker.row(r)).unwrap_or(0))
        .collect();
    Ok(RsaResult {
        doc_ids: matrix.doc_ids().to_vec(),
        cand_ids: matrix.cand_ids().to_vec(),
        listener,
        speaker,
        uniqueness,
        speaker_argmax,
        config: cfg.clone(),
        trace,
    })
}

/// The candidate the speaker prefers for `doc_index`, optionally restricted
/// to candidates that occur in that document.
pub fn speaker_select(
    result: &RsaResult,
    cands: &CandidateSet,
    doc_index: usize,
    restrict_to_own: bool,
) -> Result<usize, RsaError> {
    if doc_index >= result.n_docs() {
        return Err(RsaError::DocumentOutOfRange(doc_index));
    }
    let row = result.speaker.row(doc_index);
    if !restrict_to_own {
        return Ok(argmax(row).unwrap_or(0));
    }
    let mut best: Option<usize> = None;
    for (s, cand) in cands.candidates.iter().enumerate() {
        if !cand.has_source(doc_index) {
            continue;
        }
        if best.is_none_or(|b| row[s] > row[b]) {
            best = Some(s);
        }
    }
    best.ok_or_else(|| RsaError::NoOwnCandidates(result.doc_ids[doc_index].clone()))
}

#[derive(Serialize, Deserialize)]
struct RsaResultJson {
    doc_ids: Vec<String>,
    cand_ids: Vec<String>,
    speaker: Vec<Vec<f64>>,
    listener: Vec<Vec<f64>>,
    uniqueness: Vec<f64>,
    speaker_argmax: Vec<usize>,
    config_echo: RsaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceJson>>,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    iteration: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speaker: Option<Vec<Vec<f64>>>,
    listener: Vec<Vec<f64>>,
}

impl Serialize for RsaResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RsaResultJson {
            doc_ids: self.doc_ids.clone(),
            cand_ids: self.cand_ids.clone(),
            speaker: self.speaker.to_rows(),
            listener: self.listener.to_columns(),
            uniqueness: self.uniqueness.clone(),
            speaker_argmax: self.speaker_argmax.clone(),
            config_echo: self.config.clone(),
            trace: self.trace.as_ref().map(|steps| {
                steps
                    .iter()
                    .map(|s| TraceJson {
                        iteration: s.iteration,
                        speaker: s.speaker.as_ref().map(Grid::to_rows),
                        listener: s.listener.to_columns(),
                    })
                    .collect()
            }),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RsaResult {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RsaResultJson::deserialize(deserializer)?;
        let n = raw.doc_ids.len();
        let k = raw.cand_ids.len();
        let speaker = Grid::from_rows(raw.speaker).map_err(D::Error::custom)?;
        let listener = Grid::from_columns(raw.listener).map_err(D::Error::custom)?;
        let shape_ok = |g: &Grid| g.n_rows() == n && g.n_cols() == k;
        if !shape_ok(&speaker)
            || !shape_ok(&listener)
            || raw.uniqueness.len() != k
            || raw.speaker_argmax.len() != n
        {
            return Err(D::Error::custom(
                "RSA result dimensions disagree with its ids",
            ));
        }
        let trace = raw
            .trace
            .map(|steps| {
                steps
                    .into_iter()
                    .map(|s| {
                        Ok(TraceStep {
                            iteration: s.iteration,
                            speaker: s.speaker.map(Grid::from_rows).transpose()?,
                            listener: Grid::from_columns(s.listener)?,
                        })
                    })
                    .collect::<Result<Vec<_>, RsaError>>()
            })
            .transpose()
            .map_err(D::Error::custom)?;
        Ok(RsaResult {
            doc_ids: raw.doc_ids,
            cand_ids: raw.cand_ids,
            listener,
            speaker,
            uniqueness: raw.uniqueness,
            speaker_argmax: raw.speaker_argmax,
            config: raw.config_echo,
            trace,
        })
    }
}
