//! Run settings: a TOML file of flat dotted keys, overridden by same-named flags.

use std::path::{Path, PathBuf};

use glimpse_core::{CorpusFormat, PipelineConfig, ScorerKind};

/// Every recognised key, with a short flag alias where one reads better.
pub const KEYS: &[Key] = &[
    Key::value("input.path", Some("input")),
    Key::value("input.format", None),
    Key::value("output.dir", Some("output")),
    Key::value("segmenter.min_chars", None),
    Key::value("segmenter.max_chars", None),
    Key::value("segmenter.abbreviation_list", None),
    Key::value("scorer.kind", Some("scorer")),
    Key::value("scorer.smoothing_alpha", None),
    Key::value("scorer.floor_logprob", None),
    Key::value("scorer.temperature", None),
    Key::value("scorer.matrix_dir", None),
    Key::value("candidates.import", None),
    Key::value("rsa.iterations", None),
    Key::value("rsa.rationality_lambda", None),
    Key::value("rsa.cost_per_char", None),
    Key::switch("rsa.record_trace", None),
    Key::value("composer.n_common", None),
    Key::value("composer.n_unique", None),
    Key::value("composer.per_doc_n", None),
    Key::value("composer.variant", Some("variant")),
    Key::value("eval.similarity", None),
    Key::value("eval.vectors_path", None),
    Key::switch("eval.random_baseline", Some("random-baseline")),
    Key::value("eval.seed", Some("seed")),
    Key::value("jobs", None),
];

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub alias: Option<&'static str>,
    /// Boolean keys may be given as a bare flag.
    pub switch: bool,
}

impl Key {
    const fn value(name: &'static str, alias: Option<&'static str>) -> Self {
        Key {
            name,
            alias,
            switch: false,
        }
    }

    const fn switch(name: &'static str, alias: Option<&'static str>) -> Self {
        Key {
            name,
            alias,
            switch: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    TfidfCosine,
    ExternalVectors,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub input_path: Option<PathBuf>,
    pub input_format: CorpusFormat,
    pub output_dir: PathBuf,
    pub pipeline: PipelineConfig,
    /// Directory of `<submission_id>.matrix.tsv` files for the external scorer.
    pub matrix_dir: Option<PathBuf>,
    pub candidates_import: Option<PathBuf>,
    pub similarity: SimilarityKind,
    pub vectors_path: Option<PathBuf>,
    pub random_baseline: bool,
    pub seed: u64,
    /// 0 lets the thread pool pick.
    pub jobs: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            input_path: None,
            input_format: CorpusFormat::JsonLines,
            output_dir: PathBuf::from("glimpse-out"),
            pipeline: PipelineConfig::default(),
            matrix_dir: None,
            candidates_import: None,
            similarity: SimilarityKind::TfidfCosine,
            vectors_path: None,
            random_baseline: false,
            seed: 0,
            jobs: 0,
        }
    }
}

/// A setting as found in the config file or on the command line.
pub enum Raw<'a> {
    Toml(&'a toml::Value),
    Flag(&'a str),
}

impl Raw<'_> {
    fn text(&self, key: &str) -> Result<String, String> {
        match self {
            Raw::Toml(toml::Value::String(s)) => Ok(s.clone()),
            Raw::Toml(_) => Err(format!("{key}: expected a string")),
            Raw::Flag(s) => Ok(s.to_string()),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, String> {
        let text = match self {
            Raw::Toml(toml::Value::Integer(i)) => i.to_string(),
            Raw::Toml(toml::Value::Float(f)) => f.to_string(),
            Raw::Toml(toml::Value::Boolean(b)) => b.to_string(),
            other => other.text(key)?,
        };
        text.trim()
            .parse()
            .map_err(|_| format!("{key}: expected {what}, got {text:?}"))
    }

    fn list(&self, key: &str) -> Result<Vec<String>, String> {
        match self {
            Raw::Toml(toml::Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| format!("{key}: expected strings"))
                })
                .collect(),
            Raw::Toml(_) => Err(format!("{key}: expected an array of strings")),
            Raw::Flag(s) => Ok(s
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()),
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, raw: Raw<'_>) -> Result<(), String> {
        let p = &mut self.pipeline;
        match key {
            "input.path" => self.input_path = Some(raw.text(key)?.into()),
            "input.format" => self.input_format = raw.text(key)?.parse()?,
            "output.dir" => self.output_dir = raw.text(key)?.into(),
            "segmenter.min_chars" => p.segmenter.min_chars = raw.parsed(key, "an integer")?,
            "segmenter.max_chars" => p.segmenter.max_chars = raw.parsed(key, "an integer")?,
            "segmenter.abbreviation_list" => p.segmenter.abbreviation_list = raw.list(key)?,
            "scorer.kind" => p.scorer.kind = raw.text(key)?.parse::<ScorerKind>()?,
            "scorer.smoothing_alpha" => p.scorer.smoothing_alpha = raw.parsed(key, "a number")?,
            "scorer.floor_logprob" => p.scorer.floor_logprob = raw.parsed(key, "a number")?,
            "scorer.temperature" => p.scorer.temperature = raw.parsed(key, "a number")?,
            "scorer.matrix_dir" => self.matrix_dir = Some(raw.text(key)?.into()),
            "candidates.import" => self.candidates_import = Some(raw.text(key)?.into()),
            "rsa.iterations" => p.rsa.iterations = raw.parsed(key, "an integer")?,
            "rsa.rationality_lambda" => p.rsa.rationality_lambda = raw.parsed(key, "a number")?,
            "rsa.cost_per_char" => p.rsa.cost_per_char = raw.parsed(key, "a number")?,
            "rsa.record_trace" => p.rsa.record_trace = raw.parsed(key, "true or false")?,
            "composer.n_common" => p.composer.n_common = raw.parsed(key, "an integer")?,
            "composer.n_unique" => p.composer.n_unique = raw.parsed(key, "an integer")?,
            "composer.per_doc_n" => p.composer.per_doc_n = raw.parsed(key, "an integer")?,
            "composer.variant" => p.composer.variant = raw.text(key)?.parse()?,
            "eval.similarity" => {
                self.similarity = match raw.text(key)?.as_str() {
                    "tfidf_cosine" | "tfidf" => SimilarityKind::TfidfCosine,
                    "external_vectors" | "external" => SimilarityKind::ExternalVectors,
                    other => return Err(format!("{key}: unknown similarity {other:?}")),
                }
            }
            "eval.vectors_path" => self.vectors_path = Some(raw.text(key)?.into()),
            "eval.random_baseline" => self.random_baseline = raw.parsed(key, "true or false")?,
            "eval.seed" => self.seed = raw.parsed(key, "an unsigned integer")?,
            "jobs" => self.jobs = raw.parsed(key, "an integer")?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Apply every key of a TOML document; nested tables and dotted keys are equivalent.
    pub fn apply_toml(&mut self, source: &str) -> Result<(), String> {
        let table: toml::Table =
            toml::from_str(source).map_err(|e: toml::de::Error| e.to_string())?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (key, value) in flat {
            self.set(&key, Raw::Toml(value))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut s = Self::default();
        s.apply_toml(&source)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(s)
    }

    /// Bounds and path checks done before any work starts.
    pub fn validate(&self, needs_input: bool) -> Result<(), String> {
        self.pipeline.validate().map_err(|e| e.to_string())?;
        let seg = &self.pipeline.segmenter;
        if seg.min_chars > seg.max_chars {
            return Err("segmenter.min_chars must not exceed segmenter.max_chars".into());
        }
        if needs_input {
            match &self.input_path {
                None => return Err("input.path is required".into()),
                Some(p) if !p.exists() => {
                    return Err(format!("input.path {} does not exist", p.display()))
                }
                _ => {}
            }
        }
        if self.pipeline.scorer.kind == ScorerKind::External {
            match &self.matrix_dir {
                Some(d) if d.is_dir() => {}
                Some(d) => {
                    return Err(format!(
                        "scorer.matrix_dir {} is not a directory",
                        d.display()
                    ))
                }
                None => return Err("scorer.kind = external requires scorer.matrix_dir".into()),
            }
        }
        if let Some(p) = &self.candidates_import {
            if !p.is_file() {
                return Err(format!("candidates.import {} is not a file", p.display()));
            }
        }
        if self.similarity == SimilarityKind::ExternalVectors {
            match &self.vectors_path {
                Some(p) if p.is_file() => {}
                Some(p) => return Err(format!("eval.vectors_path {} is not a file", p.display())),
                None => {
                    return Err(
                        "eval.similarity = external_vectors requires eval.vectors_path".into(),
                    )
                }
            }
        }
        Ok(())
    }
}

fn flatten<'a>(prefix: &str, table: &'a toml::Table, out: &mut Vec<(String, &'a toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other)),
        }
    }
}
