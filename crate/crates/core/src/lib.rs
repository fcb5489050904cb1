//! Discriminative multi-document summarization with Rational Speech Act scoring.
//!
//! Candidates (sentences extracted from a set of related documents, or
//! imported summaries) are scored against every document to form a truth
//! matrix. Iterated speaker/listener reasoning over that matrix yields, per
//! document, the candidate that best singles it out, and per candidate, a
//! uniqueness score: the KL divergence of the listener's belief from uniform.
//! Those scores drive per-document summaries, a common-plus-unique consensus
//! template, and blue-to-red highlighting.

pub mod composer;
pub mod corpus;
pub mod eval;
pub mod likelihood;
pub mod pipeline;
pub mod rsa;
pub mod segmenter;
pub mod text;

pub use composer::{ComposerConfig, MdsVariant, SummaryBundle, VariantChoice};
pub use corpus::{load_corpus, load_matrix, save_matrix, CorpusFormat, Document, SubmissionGroup};
pub use eval::{EvalReport, Similarity};
pub use likelihood::{ScorerConfig, ScorerKind, TruthMatrix};
pub use pipeline::PipelineConfig;
pub use rsa::{run_rsa, RsaConfig, RsaResult};
pub use segmenter::{Candidate, CandidateSet, SegmenterConfig};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Matrix(#[from] corpus::MatrixError),
    #[error(transparent)]
    Segment(#[from] segmenter::SegmentError),
    #[error(transparent)]
    Likelihood(#[from] likelihood::LikelihoodError),
    #[error(transparent)]
    Rsa(#[from] rsa::RsaError),
    #[error(transparent)]
    Compose(#[from] composer::ComposeError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("submission {0:?} produced no candidates")]
    NoCandidates(String),
}
