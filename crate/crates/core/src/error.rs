use thiserror::Error;

/// Errors produced by corpus parsing, indexing, retrieval, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus line could not be parsed or violated a corpus invariant.
    #[error("corpus line {line}: {msg}")]
    CorpusParse { line: usize, msg: String },

    /// A query file line could not be parsed.
    #[error("queries line {line}: {msg}")]
    QueryParse { line: usize, msg: String },

    /// A qrels line could not be parsed or carried an invalid grade.
    #[error("qrels line {line}: {msg}")]
    QrelsParse { line: usize, msg: String },

    /// A run file line could not be parsed.
    #[error("run line {line}: {msg}")]
    RunParse { line: usize, msg: String },

    /// The corpus contains no tokens; collection statistics are undefined.
    #[error("empty corpus: the collection language model is undefined")]
    EmptyCorpus,

    /// An on-disk index file is missing, corrupt, truncated, or has an
    /// unsupported version.
    #[error("index format: {0}")]
    IndexFormat(String),

    /// An operation received an index of the wrong kind (message index
    /// where a virtual-document index was required, or vice versa).
    #[error("index kind mismatch: expected {expected}, found {found}")]
    IndexKind {
        expected: &'static str,
        found: &'static str,
    },

    /// A parameter was outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Cross-validation was requested with fewer queries than folds.
    #[error("cannot split {queries} queries into {folds} folds")]
    NotEnoughQueries { queries: usize, folds: usize },

    /// The synthetic-corpus vocabulary cannot cover the requested topics.
    #[error("vocabulary of {vocabulary} words is too small for {topics} topics (need at least {needed})")]
    VocabularyTooSmall {
        vocabulary: usize,
        topics: usize,
        needed: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
