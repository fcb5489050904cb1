use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use glimpse_core::composer::{compose_bundle, highlights_ansi, highlights_html, SummaryBundle};
use glimpse_core::corpus::{matrix_to_tsv, write_atomic};
use glimpse_core::eval::{evaluate, random_per_doc, report_csv, Aggregate, VectorTable};
use glimpse_core::pipeline::{candidates_for, demo_group, run_group, summarize};
use glimpse_core::{load_corpus, RsaResult, ScorerKind, Similarity, SubmissionGroup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::config::{Settings, SimilarityKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] glimpse_core::Error),
    #[error("{0}")]
    Data(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(_) | CliError::Data(_) => 2,
            CliError::Write { .. } | CliError::Internal(_) => 3,
        }
    }
}

#[derive(Deserialize)]
struct ImportRecord {
    submission_id: String,
    doc_id: String,
    text: String,
}

type Imports = HashMap<String, Vec<(String, String)>>;

fn load_groups(s: &Settings) -> Result<Vec<SubmissionGroup>, CliError> {
    let path = s
        .input_path
        .as_deref()
        .ok_or_else(|| CliError::Config("input.path is required".into()))?;
    let groups = load_corpus(path, s.input_format).map_err(glimpse_core::Error::from)?;
    if groups.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no submissions",
            path.display()
        )));
    }
    Ok(groups)
}

fn load_imports(s: &Settings) -> Result<Option<Imports>, CliError> {
    let Some(path) = &s.candidates_import else {
        return Ok(None);
    };
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut by_group: Imports = HashMap::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ImportRecord = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        by_group
            .entry(r.submission_id)
            .or_default()
            .push((r.doc_id, r.text));
    }
    Ok(Some(by_group))
}

fn artifact(dir: &Path, submission_id: &str, suffix: &str) -> Result<PathBuf, CliError> {
    if submission_id.is_empty()
        || submission_id == "."
        || submission_id == ".."
        || submission_id.contains(['/', '\\'])
    {
        return Err(CliError::Data(format!(
            "submission id {submission_id:?} cannot be used as a file name"
        )));
    }
    Ok(dir.join(format!("{submission_id}.{suffix}")))
}

fn for_each_group<T, F>(s: &Settings, groups: &[SubmissionGroup], f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize, &SubmissionGroup) -> Result<T, CliError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs)
        .build()
        .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        groups
            .par_iter()
            .enumerate()
            .map(|(i, g)| f(i, g))
            .collect()
    })
}

/// Writes every output only after all groups succeeded.
fn write_all(
    dir: &Path,
    outputs: impl IntoIterator<Item = (PathBuf, Vec<u8>)>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    for (path, bytes) in outputs {
        write_atomic(&path, &bytes).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn imported_for<'a>(
    imports: &'a Option<Imports>,
    group: &SubmissionGroup,
) -> Option<&'a [(String, String)]> {
    imports.as_ref().map(|m| {
        m.get(&group.submission_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    })
}

fn external_matrix(s: &Settings, group: &SubmissionGroup) -> Result<Option<PathBuf>, CliError> {
    match (&s.matrix_dir, s.pipeline.scorer.kind) {
        (Some(dir), ScorerKind::External) => {
            artifact(dir, &group.submission_id, "matrix.tsv").map(Some)
        }
        _ => Ok(None),
    }
}

fn warn_all(group: &SubmissionGroup, warnings: &[String]) {
    for w in warnings {
        log::warn!("{}: {w}", group.submission_id);
    }
}

pub fn score(s: &Settings) -> Result<(), CliError> {
    let groups = load_groups(s)?;
    let imports = load_imports(s)?;
    let outputs = for_each_group(s, &groups, |_, g| {
        let ext = external_matrix(s, g)?;
        let run = run_group(g, &s.pipeline, imported_for(&imports, g), ext.as_deref())?;
        warn_all(g, &run.warnings);
        let tsv = matrix_to_tsv(&run.matrix).map_err(glimpse_core::Error::from)?;
        Ok(vec![
            (
                artifact(&s.output_dir, &g.submission_id, "matrix.tsv")?,
                tsv.into_bytes(),
            ),
            (
                artifact(&s.output_dir, &g.submission_id, "rsa.json")?,
                json_bytes(&run.rsa)?,
            ),
        ])
    })?;
    write_all(&s.output_dir, outputs.into_iter().flatten())
}

/// A previously written RSA result, if it was produced under the same RSA
/// settings for the same documents and candidates.
fn cached_rsa(s: &Settings, group: &SubmissionGroup, cand_ids: &[String]) -> Option<RsaResult> {
    let path = artifact(&s.output_dir, &group.submission_id, "rsa.json").ok()?;
    let raw = std::fs::read_to_string(&path).ok()?;
    let result: RsaResult = match serde_json::from_str(&raw) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("ignoring unreadable {}: {e}", path.display());
            return None;
        }
    };
    let fresh = result.config == s.pipeline.rsa
        && result.doc_ids == group.doc_ids()
        && result.cand_ids == cand_ids;
    if fresh {
        log::info!("reusing {}", path.display());
    }
    fresh.then_some(result)
}

fn bundle_for(
    s: &Settings,
    group: &SubmissionGroup,
    imports: &Option<Imports>,
) -> Result<SummaryBundle, CliError> {
    let imported = imported_for(imports, group);
    let cands = candidates_for(group, &s.pipeline.segmenter, imported)?;
    let bundle = match cached_rsa(s, group, &cands.ids()) {
        Some(rsa) => {
            let mut b = compose_bundle(&rsa, &cands, group, &s.pipeline.composer)
                .map_err(glimpse_core::Error::from)?;
            for w in &cands.warnings {
                if !b.warnings.contains(w) {
                    b.warnings.push(w.clone());
                }
            }
            b
        }
        None => {
            let ext = external_matrix(s, group)?;
            let run = run_group(group, &s.pipeline, imported, ext.as_deref())?;
            summarize(&run, group, &s.pipeline.composer)?
        }
    };
    warn_all(group, &bundle.warnings);
    Ok(bundle)
}

pub fn summarize_cmd(s: &Settings) -> Result<(), CliError> {
    let groups = load_groups(s)?;
    let imports = load_imports(s)?;
    let outputs = for_each_group(s, &groups, |_, g| {
        let bundle = bundle_for(s, g, &imports)?;
        let html = highlights_html(&bundle, g);
        Ok(vec![
            (
                artifact(&s.output_dir, &g.submission_id, "summary.json")?,
                json_bytes(&bundle)?,
            ),
            (
                artifact(&s.output_dir, &g.submission_id, "highlights.html")?,
                html.into_bytes(),
            ),
        ])
    })?;
    write_all(&s.output_dir, outputs.into_iter().flatten())
}

fn random_bundle(
    s: &Settings,
    index: usize,
    group: &SubmissionGroup,
    imports: &Option<Imports>,
) -> Result<SummaryBundle, CliError> {
    let cands = candidates_for(group, &s.pipeline.segmenter, imported_for(imports, group))?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(index as u64);
    Ok(SummaryBundle {
        submission_id: group.submission_id.clone(),
        per_doc: random_per_doc(group, &cands, &mut rng),
        mds_speaker: None,
        mds_unique: None,
        highlights: vec![],
        warnings: cands.warnings,
    })
}

pub fn eval(s: &Settings) -> Result<(), CliError> {
    let groups = load_groups(s)?;
    let imports = load_imports(s)?;
    let similarity = match s.similarity {
        SimilarityKind::TfidfCosine => Similarity::TfidfCosine,
        SimilarityKind::ExternalVectors => {
            let path = s
                .vectors_path
                .as_deref()
                .ok_or_else(|| CliError::Config("eval.vectors_path is required".into()))?;
            let table = VectorTable::load(path).map_err(glimpse_core::Error::from)?;
            Similarity::ExternalVectors(Some(table))
        }
    };
    let bundles = for_each_group(s, &groups, |i, g| {
        if s.random_baseline {
            random_bundle(s, i, g, &imports)
        } else {
            bundle_for(s, g, &imports)
        }
    })?;
    let items: Vec<_> = bundles.iter().zip(&groups).collect();
    let report = evaluate(&items, &similarity).map_err(glimpse_core::Error::from)?;
    let csv = report_csv(&report).map_err(glimpse_core::Error::from)?;
    write_all(
        &s.output_dir,
        [
            (s.output_dir.join("eval_report.json"), json_bytes(&report)?),
            (s.output_dir.join("eval_report.csv"), csv.into_bytes()),
        ],
    )?;
    print!("{}", aggregate_table(&report.aggregate));
    Ok(())
}

pub fn aggregate_table(agg: &Aggregate) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:>10} {:>10} {:>5}",
        "metric", "mean", "std", "n"
    );
    let mut row = |name: &str, st: &glimpse_core::eval::Stat| {
        let _ = writeln!(
            out,
            "{name:<28} {:>10.4} {:>10.4} {:>5}",
            st.mean, st.std, st.count
        );
    };
    row("discriminativeness", &agg.discriminativeness);
    row("disc_per_char", &agg.disc_per_char);
    for (k, v) in &agg.rouge {
        row(k, v);
    }
    out
}

pub fn demo(s: &Settings) -> Result<(), CliError> {
    let group = demo_group();
    let run = run_group(&group, &s.pipeline, None, None)?;
    let bundle = summarize(&run, &group, &s.pipeline.composer)?;
    let mut out = String::new();
    let _ = writeln!(out, "Documents");
    for d in &group.documents {
        let _ = writeln!(out, "  {}: {}", d.id, d.text);
    }
    let _ = writeln!(
        out,
        "\nCandidates (listener mass per document, uniqueness in nats)"
    );
    let _ = write!(out, "  {:<4}", "");
    for id in group.doc_ids() {
        let _ = write!(out, " {id:>10}");
    }
    let _ = writeln!(out, " {:>10}", "unique");
    for (k, c) in run.candidates.candidates.iter().enumerate() {
        let _ = write!(out, "  {:<4}", c.id);
        for p in run.rsa.listener.column(k) {
            let _ = write!(out, " {p:>10.4}");
        }
        let _ = writeln!(out, " {:>10.4}  {}", run.rsa.uniqueness[k], c.text);
    }
    let _ = writeln!(out, "\nPer-document summaries");
    for p in &bundle.per_doc {
        let _ = writeln!(out, "  {}: {}", p.doc_id, p.text);
    }
    for m in [&bundle.mds_speaker, &bundle.mds_unique]
        .into_iter()
        .flatten()
    {
        let _ = writeln!(out, "\nConsensus summary ({:?})\n  {}", m.variant, m.text);
    }
    let _ = writeln!(out, "\nHighlights (blue = common, red = unique)");
    if std::io::stdout().is_terminal() {
        out.push_str(&highlights_ansi(&bundle, &group));
    } else {
        for h in &bundle.highlights {
            for span in &h.spans {
                let _ = writeln!(
                    out,
                    "  {} {} {:.4} {}",
                    h.doc_id, span.candidate_id, span.score, span.color
                );
            }
        }
    }
    print!("{out}");
    Ok(())
}
