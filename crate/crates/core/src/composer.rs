//! Summary composition and highlight rendering.
//!
//! Per-document summaries pick each review's strongest own candidates under
//! the final speaker. The multi-document template concatenates a block of the
//! most common candidates (lowest uniqueness) with a block of the most unique
//! ones, chosen either by speaker argmaxes or by uniqueness.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SubmissionGroup;
use crate::rsa::RsaResult;
use crate::segmenter::CandidateSet;
use crate::text::{char_slice, collapse_whitespace};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("RSA result does not match inputs: {0}")]
    Mismatch(String),
    #[error("invalid composer config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdsVariant {
    Speaker,
    Unique,
}

/// Which multi-document variants a bundle carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantChoice {
    Speaker,
    Unique,
    Both,
}

impl std::str::FromStr for VariantChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "speaker" => Ok(VariantChoice::Speaker),
            "unique" => Ok(VariantChoice::Unique),
            "both" => Ok(VariantChoice::Both),
            other => Err(format!(
                "unknown variant {other:?} (speaker, unique or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposerConfig {
    pub n_common: usize,
    pub n_unique: usize,
    /// Sentences per per-document summary.
    pub per_doc_n: usize,
    pub variant: VariantChoice,
}

impl Default for ComposerConfig {
    fn default() -> Self {
        Self {
            n_common: 3,
            n_unique: 3,
            per_doc_n: 1,
            variant: VariantChoice::Both,
        }
    }
}

impl ComposerConfig {
    pub fn validate(&self) -> Result<(), ComposeError> {
        if self.per_doc_n == 0 {
            return Err(ComposeError::InvalidConfig("per_doc_n must be >= 1".into()));
        }
        if self.n_common == 0 && self.n_unique == 0 {
            return Err(ComposeError::InvalidConfig(
                "n_common and n_unique cannot both be 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerDocSummary {
    pub doc_id: String,
    pub doc_index: usize,
    pub candidate_ids: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsSummary {
    pub variant: MdsVariant,
    pub common_ids: Vec<String>,
    pub unique_ids: Vec<String>,
    /// Common block followed by unique block.
    pub candidate_ids: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightSpan {
    pub candidate_id: String,
    /// Character offsets into the document, end exclusive.
    pub start: usize,
    pub end: usize,
    pub score: f64,
    /// Position on the blue→red scale in `[0, 1]`.
    pub scale: f64,
    /// `scale` rounded to tenths, 0 (blue) to 10 (red).
    pub bucket: u8,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocHighlights {
    pub doc_id: String,
    pub doc_index: usize,
    pub spans: Vec<HighlightSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBundle {
    pub submission_id: String,
    pub per_doc: Vec<PerDocSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mds_speaker: Option<MdsSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mds_unique: Option<MdsSummary>,
    pub highlights: Vec<DocHighlights>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn check_alignment(
    result: &RsaResult,
    cands: &CandidateSet,
    group: Option<&SubmissionGroup>,
) -> Result<(), ComposeError> {
    if result.cand_ids.len() != cands.len()
        || result
            .cand_ids
            .iter()
            .zip(&cands.candidates)
            .any(|(a, c)| *a != c.id)
    {
        return Err(ComposeError::Mismatch("candidate ids differ".into()));
    }
    if let Some(g) = group {
        if result.doc_ids != g.doc_ids() {
            return Err(ComposeError::Mismatch("document ids differ".into()));
        }
    }
    Ok(())
}

fn render(cands: &CandidateSet, indices: &[usize]) -> String {
    indices
        .iter()
        .map(|&i| collapse_whitespace(&cands.candidates[i].text))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Top `n` own candidates per document by final speaker probability, in document order.
pub fn compose_per_doc(
    result: &RsaResult,
    cands: &CandidateSet,
    group: &SubmissionGroup,
    n_sentences: usize,
) -> Result<(Vec<PerDocSummary>, Vec<String>), ComposeError> {
    if n_sentences == 0 {
        return Err(ComposeError::InvalidConfig(
            "n_sentences must be >= 1".into(),
        ));
    }
    check_alignment(result, cands, Some(group))?;
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(group.len());
    for doc in &group.documents {
        let row = result.speaker.row(doc.index);
        let mut own: Vec<usize> = (0..cands.len())
            .filter(|&s| cands.candidates[s].has_source(doc.index))
            .collect();
        own.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        if own.len() < n_sentences {
            warnings.push(format!(
                "document {:?} has {} candidates, fewer than the {} requested",
                doc.id,
                own.len(),
                n_sentences
            ));
        }
        own.truncate(n_sentences);
        let position = |s: usize| {
            cands.candidates[s]
                .span_in(doc.index)
                .map_or(0, |sp| sp.start)
        };
        own.sort_by_key(|&s| (position(s), s));
        out.push(PerDocSummary {
            doc_id: doc.id.clone(),
            doc_index: doc.index,
            candidate_ids: own
                .iter()
                .map(|&s| cands.candidates[s].id.clone())
                .collect(),
            text: render(cands, &own),
        });
    }
    Ok((out, warnings))
}

/// Split the available candidates between the two blocks when fewer exist than requested.
fn allocate(k: usize, n_common: usize, n_unique: usize) -> (usize, usize) {
    let total = n_common + n_unique;
    if k >= total {
        (n_common, n_unique)
    } else {
        let common = k * n_common / total;
        (common, k - common)
    }
}

/// The consensus-plus-unique template.
pub fn compose_mds(
    result: &RsaResult,
    cands: &CandidateSet,
    variant: MdsVariant,
    n_common: usize,
    n_unique: usize,
) -> Result<(MdsSummary, Vec<String>), ComposeError> {
    if n_common == 0 && n_unique == 0 {
        return Err(ComposeError::InvalidConfig(
            "n_common and n_unique cannot both be 0".into(),
        ));
    }
    check_alignment(result, cands, None)?;
    let k = cands.len();
    let mut warnings = Vec::new();
    if k < n_common + n_unique {
        warnings.push(format!(
            "only {k} candidates for {} requested slots",
            n_common + n_unique
        ));
    }
    let (common_slots, unique_slots) = allocate(k, n_common, n_unique);
    let u = &result.uniqueness;

    let mut by_commonness: Vec<usize> = (0..k).collect();
    by_commonness.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));
    let mut common: Vec<usize> = by_commonness.into_iter().take(common_slots).collect();

    let unique_pool: Vec<usize> = match variant {
        MdsVariant::Unique => {
            let mut by_uniqueness: Vec<usize> = (0..k).collect();
            by_uniqueness.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
            by_uniqueness.into_iter().take(unique_slots).collect()
        }
        MdsVariant::Speaker => {
            let mut picks: Vec<(usize, f64)> = result
                .speaker_argmax
                .iter()
                .enumerate()
                .map(|(d, &s)| (s, result.speaker.get(d, s)))
                .collect();
            picks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut chosen: Vec<usize> = Vec::new();
            for (s, _) in picks {
                if chosen.len() == unique_slots {
                    break;
                }
                if !chosen.contains(&s) {
                    chosen.push(s);
                }
            }
            chosen
        }
    };
    let mut unique: Vec<usize> = unique_pool
        .into_iter()
        .filter(|s| !common.contains(s))
        .collect();
    common.sort_unstable();
    unique.sort_unstable();

    let ordered: Vec<usize> = common.iter().chain(&unique).copied().collect();
    let ids = |v: &[usize]| {
        v.iter()
            .map(|&s| cands.candidates[s].id.clone())
            .collect::<Vec<_>>()
    };
    Ok((
        MdsSummary {
            variant,
            common_ids: ids(&common),
            unique_ids: ids(&unique),
            candidate_ids: ids(&ordered),
            text: render(cands, &ordered),
        },
        warnings,
    ))
}

/// Common end of the highlight scale.
pub const BLUE: [u8; 3] = [184, 199, 227];
/// Unique end of the highlight scale.
pub const RED: [u8; 3] = [239, 170, 170];

/// Linear blend between [`BLUE`] (0) and [`RED`] (1).
pub fn scale_color(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let mut out = [0u8; 3];
    for i in 0..3 {
        let v = BLUE[i] as f64 + (RED[i] as f64 - BLUE[i] as f64) * t;
        out[i] = v.round() as u8;
    }
    out
}

pub fn hex_color(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Position of a uniqueness score on the color scale, anchored at `ln N`.
pub fn scale_position(score: f64, n_docs: usize) -> f64 {
    let max = (n_docs as f64).ln();
    if max <= 0.0 {
        0.0
    } else {
        (score / max).clamp(0.0, 1.0)
    }
}

/// Annotate every extractive candidate span with its uniqueness color.
pub fn render_highlights(
    result: &RsaResult,
    cands: &CandidateSet,
    group: &SubmissionGroup,
) -> Result<(Vec<DocHighlights>, Vec<String>), ComposeError> {
    check_alignment(result, cands, Some(group))?;
    let mut docs: Vec<DocHighlights> = group
        .documents
        .iter()
        .map(|d| DocHighlights {
            doc_id: d.id.clone(),
            doc_index: d.index,
            spans: Vec::new(),
        })
        .collect();
    let mut warnings = Vec::new();
    for (s, cand) in cands.candidates.iter().enumerate() {
        if !cand.is_extractive() {
            warnings.push(format!(
                "candidate {} has no text span; not highlighted",
                cand.id
            ));
            continue;
        }
        let score = result.uniqueness[s];
        let scale = scale_position(score, group.len());
        for src in &cand.sources {
            docs[src.doc_index].spans.push(HighlightSpan {
                candidate_id: cand.id.clone(),
                start: src.start,
                end: src.end,
                score,
                scale,
                bucket: (scale * 10.0).round() as u8,
                color: hex_color(scale_color(scale)),
            });
        }
    }
    for d in &mut docs {
        d.spans.sort_by_key(|s| (s.start, s.end));
    }
    Ok((docs, warnings))
}

/// Per-document summaries, the selected template variants and highlights.
pub fn compose_bundle(
    result: &RsaResult,
    cands: &CandidateSet,
    group: &SubmissionGroup,
    cfg: &ComposerConfig,
) -> Result<SummaryBundle, ComposeError> {
    cfg.validate()?;
    let mut warnings = cands.warnings.clone();
    let (per_doc, w) = compose_per_doc(result, cands, group, cfg.per_doc_n)?;
    warnings.extend(w);
    let mut mds = |variant| -> Result<MdsSummary, ComposeError> {
        let (m, w) = compose_mds(result, cands, variant, cfg.n_common, cfg.n_unique)?;
        warnings.extend(w);
        Ok(m)
    };
    let mds_speaker = matches!(cfg.variant, VariantChoice::Speaker | VariantChoice::Both)
        .then(|| mds(MdsVariant::Speaker))
        .transpose()?;
    let mds_unique = matches!(cfg.variant, VariantChoice::Unique | VariantChoice::Both)
        .then(|| mds(MdsVariant::Unique))
        .transpose()?;
    let (highlights, w) = render_highlights(result, cands, group)?;
    warnings.extend(w);
    Ok(SummaryBundle {
        submission_id: group.submission_id.clone(),
        per_doc,
        mds_speaker,
        mds_unique,
        highlights,
        warnings,
    })
}

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Walk a document, alternating plain text and highlighted spans.
fn walk_spans<'a>(
    text: &'a str,
    spans: &'a [HighlightSpan],
    mut emit: impl FnMut(&'a str, Option<&'a HighlightSpan>),
) {
    let total = text.chars().count();
    let mut cursor = 0;
    for span in spans {
        if span.start > cursor {
            emit(char_slice(text, cursor, span.start), None);
        }
        emit(char_slice(text, span.start, span.end), Some(span));
        cursor = span.end;
    }
    if cursor < total {
        emit(char_slice(text, cursor, total), None);
    }
}

/// Standalone HTML page with one section per review.
pub fn highlights_html(bundle: &SummaryBundle, group: &SubmissionGroup) -> String {
    let mut html = String::new();
    let title = escape_html(&group.submission_id);
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n\
         <style>body{{font-family:sans-serif;max-width:60em;margin:2em auto;line-height:1.5}}\
         .review p{{white-space:pre-wrap}}</style>\n</head>\n<body>\n<h1>{title}</h1>\n\
         <p class=\"legend\"><span style=\"background-color:{}\">common</span> \u{2192} \
         <span style=\"background-color:{}\">unique</span></p>\n",
        hex_color(BLUE),
        hex_color(RED)
    );
    for (doc, hl) in group.documents.iter().zip(&bundle.highlights) {
        let id = escape_html(&doc.id);
        let _ = write!(
            html,
            "<section class=\"review\" id=\"review-{id}\">\n<h2>{id}</h2>\n<p>"
        );
        walk_spans(&doc.text, &hl.spans, |chunk, span| match span {
            None => html.push_str(&escape_html(chunk)),
            Some(s) => {
                let _ = write!(
                    html,
                    "<span data-candidate=\"{}\" title=\"uniqueness {:.4}\" style=\"background-color:{}\">{}</span>",
                    escape_html(&s.candidate_id),
                    s.score,
                    s.color,
                    escape_html(chunk)
                );
            }
        });
        html.push_str("</p>\n</section>\n");
    }
    html.push_str("</body>\n</html>\n");
    html
}

/// Terminal rendering with 24-bit background colors.
pub fn highlights_ansi(bundle: &SummaryBundle, group: &SubmissionGroup) -> String {
    let mut out = String::new();
    for (doc, hl) in group.documents.iter().zip(&bundle.highlights) {
        let _ = writeln!(out, "\x1b[1m{}\x1b[0m", doc.id);
        walk_spans(&doc.text, &hl.spans, |chunk, span| match span {
            None => out.push_str(chunk),
            Some(s) => {
                let [r, g, b] = scale_color(s.scale);
                let _ = write!(out, "\x1b[48;2;{r};{g};{b}m\x1b[38;2;0;0;0m{chunk}\x1b[0m");
            }
        });
        out.push_str("\n\n");
    }
    out
}
