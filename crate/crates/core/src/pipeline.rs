//! End-to-end wiring for one submission group: candidates, truth matrix, RSA,
//! and composition.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composer::{compose_bundle, ComposerConfig, SummaryBundle};
use crate::corpus::SubmissionGroup;
use crate::likelihood::{score, score_external, ScorerConfig, ScorerKind, TruthMatrix};
use crate::rsa::{run_rsa, RsaConfig, RsaResult};
use crate::segmenter::{extract_candidates, import_candidates, CandidateSet, SegmenterConfig};
use crate::Error;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub scorer: ScorerConfig,
    pub rsa: RsaConfig,
    pub composer: ComposerConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.scorer.validate()?;
        self.rsa.validate()?;
        self.composer.validate()?;
        Ok(())
    }
}

/// Everything computed for one group before composition.
#[derive(Debug, Clone)]
pub struct GroupRun {
    pub candidates: CandidateSet,
    pub matrix: TruthMatrix,
    pub rsa: RsaResult,
    pub warnings: Vec<String>,
}

/// Extracted sentences, or the imported `(doc_id, text)` records when given.
pub fn candidates_for(
    group: &SubmissionGroup,
    cfg: &SegmenterConfig,
    imported: Option<&[(String, String)]>,
) -> Result<CandidateSet, Error> {
    let set = match imported {
        Some(records) => import_candidates(group, records)?,
        None => extract_candidates(group, cfg)?,
    };
    if set.is_empty() {
        return Err(Error::NoCandidates(group.submission_id.clone()));
    }
    Ok(set)
}

pub fn run_group(
    group: &SubmissionGroup,
    cfg: &PipelineConfig,
    imported: Option<&[(String, String)]>,
    external_matrix: Option<&Path>,
) -> Result<GroupRun, Error> {
    let candidates = candidates_for(group, &cfg.segmenter, imported)?;
    let scored = match (cfg.scorer.kind, external_matrix) {
        (ScorerKind::External, Some(path)) => score_external(path, group, &candidates)?,
        _ => score(group, &candidates, &cfg.scorer)?,
    };
    let rsa = run_rsa(&scored.matrix, &candidates, &cfg.rsa)?;
    let mut warnings = candidates.warnings.clone();
    warnings.extend(scored.warnings);
    Ok(GroupRun {
        candidates,
        matrix: scored.matrix,
        rsa,
        warnings,
    })
}

pub fn summarize(
    run: &GroupRun,
    group: &SubmissionGroup,
    cfg: &ComposerConfig,
) -> Result<SummaryBundle, Error> {
    let mut bundle = compose_bundle(&run.rsa, &run.candidates, group, cfg)?;
    for w in &run.warnings {
        if !bundle.warnings.contains(w) {
            bundle.warnings.push(w.clone());
        }
    }
    Ok(bundle)
}

/// The two short reviews used as the built-in demo.
pub fn demo_group() -> SubmissionGroup {
    SubmissionGroup::from_texts(
        "demo",
        [
            (
                "review-1",
                "This paper is well-written. However, the theoretical part lacks clarification.",
            ),
            (
                "review-2",
                "This paper is well-written. I believe it should be accepted.",
            ),
        ],
    )
}
