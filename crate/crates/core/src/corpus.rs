//! Corpus ingestion and on-disk formats.
//!
//! Documents arrive either as JSON lines (one record per document) or as a
//! directory tree with one subdirectory per submission and one `.txt` file
//! per document. Truth matrices are persisted as tab-separated text.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::likelihood::TruthMatrix;
use crate::text::nfc;

/// File name reserved for the gold summary in directory mode.
pub const GOLD_SUMMARY_FILE: &str = "gold_summary.txt";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("duplicate document id {id:?} in submission {submission_id:?}")]
    Duplicate { submission_id: String, id: String },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("matrix is not finite at ({doc}, {cand})")]
    NonFinite { doc: String, cand: String },
    #[error("invalid matrix: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub submission_id: String,
    pub text: String,
    /// Position within the submission group.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionGroup {
    pub submission_id: String,
    pub documents: Vec<Document>,
    /// Reference summary (a meta-review), only consumed by evaluation.
    pub gold_summary: Option<String>,
}

impl SubmissionGroup {
    /// Build a group from `(id, text)` pairs, assigning indices in order.
    pub fn from_texts<I, A, B>(submission_id: &str, docs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: AsRef<str>,
    {
        let documents = docs
            .into_iter()
            .enumerate()
            .map(|(index, (id, text))| Document {
                id: id.into(),
                submission_id: submission_id.to_string(),
                text: nfc(text.as_ref()),
                index,
            })
            .collect();
        Self {
            submission_id: submission_id.to_string(),
            documents,
            gold_summary: None,
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }

    pub fn index_of(&self, doc_id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.id == doc_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    JsonLines,
    DirectoryOfTextFiles,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json_lines" | "jsonl" => Ok(CorpusFormat::JsonLines),
            "directory_of_text_files" | "directory" | "dir" => {
                Ok(CorpusFormat::DirectoryOfTextFiles)
            }
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    submission_id: Option<String>,
    text: Option<String>,
    gold_summary: Option<String>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<SubmissionGroup>, CorpusError> {
    match format {
        CorpusFormat::JsonLines => {
            let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            parse_json_lines(&raw)
        }
        CorpusFormat::DirectoryOfTextFiles => load_directory(path),
    }
}

/// Parse JSON-lines corpus text. Blank lines are skipped.
pub fn parse_json_lines(raw: &str) -> Result<Vec<SubmissionGroup>, CorpusError> {
    let mut builder = GroupBuilder::default();
    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError::Record {
            line: line_no,
            message: format!("malformed JSON: {e}"),
        })?;
        let missing = |field: &str| CorpusError::Record {
            line: line_no,
            message: format!("missing field {field:?}"),
        };
        let id = rec.id.ok_or_else(|| missing("id"))?;
        let submission_id = rec.submission_id.ok_or_else(|| missing("submission_id"))?;
        let text = rec.text.ok_or_else(|| missing("text"))?;
        if text.trim().is_empty() {
            return Err(CorpusError::Record {
                line: line_no,
                message: format!("document {id:?} has empty text"),
            });
        }
        match builder.push(&submission_id, &id, &text, rec.gold_summary.as_deref()) {
            Ok(()) => {}
            Err(PushError::Duplicate) => return Err(CorpusError::Duplicate { submission_id, id }),
            Err(PushError::GoldConflict) => {
                return Err(CorpusError::Record {
                    line: line_no,
                    message: format!("conflicting gold_summary for submission {submission_id:?}"),
                })
            }
        }
    }
    Ok(builder.finish())
}

fn load_directory(root: &Path) -> Result<Vec<SubmissionGroup>, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut submissions: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    submissions.sort();

    let mut builder = GroupBuilder::default();
    for dir in submissions {
        let submission_id = file_name(&dir);
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        let gold = files
            .iter()
            .find(|p| file_name(p) == GOLD_SUMMARY_FILE)
            .map(|p| fs::read_to_string(p).map_err(io_err(p)))
            .transpose()?;
        for file in files.iter().filter(|p| file_name(p) != GOLD_SUMMARY_FILE) {
            let text = fs::read_to_string(file).map_err(io_err(file))?;
            if text.trim().is_empty() {
                return Err(CorpusError::File {
                    path: file.clone(),
                    message: "empty document".into(),
                });
            }
            let id = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if builder
                .push(&submission_id, &id, &text, gold.as_deref())
                .is_err()
            {
                return Err(CorpusError::Duplicate { submission_id, id });
            }
        }
    }
    Ok(builder.finish())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

enum PushError {
    Duplicate,
    GoldConflict,
}

#[derive(Default)]
struct GroupBuilder {
    groups: Vec<SubmissionGroup>,
    by_id: HashMap<String, usize>,
    seen: HashSet<(String, String)>,
}

impl GroupBuilder {
    fn push(
        &mut self,
        submission_id: &str,
        id: &str,
        text: &str,
        gold: Option<&str>,
    ) -> Result<(), PushError> {
        if !self
            .seen
            .insert((submission_id.to_string(), id.to_string()))
        {
            return Err(PushError::Duplicate);
        }
        let slot = *self
            .by_id
            .entry(submission_id.to_string())
            .or_insert_with(|| {
                self.groups.push(SubmissionGroup {
                    submission_id: submission_id.to_string(),
                    documents: Vec::new(),
                    gold_summary: None,
                });
                self.groups.len() - 1
            });
        let group = &mut self.groups[slot];
        if let Some(g) = gold.filter(|g| !g.trim().is_empty()) {
            let g = nfc(g);
            match &group.gold_summary {
                Some(existing) if *existing != g => return Err(PushError::GoldConflict),
                _ => group.gold_summary = Some(g),
            }
        }
        let index = group.documents.len();
        group.documents.push(Document {
            id: id.to_string(),
            submission_id: submission_id.to_string(),
            text: nfc(text),
            index,
        });
        Ok(())
    }

    fn finish(self) -> Vec<SubmissionGroup> {
        self.groups
    }
}

/// Serialize a truth matrix to its TSV form.
pub fn matrix_to_tsv(matrix: &TruthMatrix) -> Result<String, MatrixError> {
    let mut out = String::from("#doc_id");
    for c in matrix.cand_ids() {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (d, doc) in matrix.doc_ids().iter().enumerate() {
        out.push_str(doc);
        for (s, v) in matrix.row(d).iter().enumerate() {
            if !v.is_finite() {
                return Err(MatrixError::NonFinite {
                    doc: doc.clone(),
                    cand: matrix.cand_ids()[s].clone(),
                });
            }
            // `Display` for f64 is the shortest string that parses back to the same bits.
            out.push('\t');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse the TSV form. Rows and columns in error messages are 1-based.
pub fn matrix_from_tsv(raw: &str) -> Result<TruthMatrix, MatrixError> {
    let mut lines = raw.lines().enumerate().filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| MatrixError::Parse {
        row: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let mut cols = header.split('\t');
    if cols.next() != Some("#doc_id") {
        return Err(MatrixError::Parse {
            row: 1,
            column: 1,
            message: "unknown header, expected first cell `#doc_id`".into(),
        });
    }
    let cand_ids: Vec<String> = cols.map(str::to_string).collect();
    let mut seen = HashSet::new();
    for (j, c) in cand_ids.iter().enumerate() {
        if c.is_empty() || !seen.insert(c.as_str()) {
            return Err(MatrixError::Parse {
                row: 1,
                column: j + 2,
                message: format!("empty or duplicate candidate id {c:?}"),
            });
        }
    }

    let mut doc_ids = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let row_no = i + 1;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != cand_ids.len() + 1 {
            return Err(MatrixError::Parse {
                row: row_no,
                column: cells.len(),
                message: format!(
                    "expected {} values, found {}",
                    cand_ids.len(),
                    cells.len() - 1
                ),
            });
        }
        let values = cells[1..]
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| MatrixError::Parse {
                        row: row_no,
                        column: j + 2,
                        message: format!("not a finite number: {cell:?}"),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        doc_ids.push(cells[0].to_string());
        rows.push(values);
    }
    TruthMatrix::new(doc_ids, cand_ids, rows).map_err(|e| MatrixError::Shape(e.to_string()))
}

pub fn save_matrix(matrix: &TruthMatrix, path: &Path) -> Result<(), MatrixError> {
    let body = matrix_to_tsv(matrix)?;
    write_atomic(path, body.as_bytes()).map_err(|source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_matrix(path: &Path) -> Result<TruthMatrix, MatrixError> {
    let raw = fs::read_to_string(path).map_err(|source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    matrix_from_tsv(&raw)
}

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name()
            .map(|s| s.to_string_lossy())
            .unwrap_or_default(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
