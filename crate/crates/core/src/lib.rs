//! Forum thread retrieval by message-score fusion.
//!
//! Threads are not flat documents: a thread is an initial message plus its
//! replies. This crate ranks threads in two stages. First, individual
//! messages are ranked against the query with a Dirichlet-smoothed
//! query-likelihood language model. Second, each thread's top-k ranked
//! messages are fused into a single thread score by one of thirteen
//! aggregation methods (voting-style rank fusion: Votes, RR, BordaFuse,
//! the Comb* family, and their exponential variants).
//!
//! The crate also contains the experiment harness around that pipeline:
//! TREC-style evaluation (MAP, P@10, NDCG@10), paired t-tests, exhaustive
//! grid search with k-fold cross-validation, per-k sweeps, and a seeded
//! synthetic corpus generator for reproducible experiments.
//!
//! Module map:
//!
//! * [`corpus`] — corpus / query / qrels parsing and the analysis chain
//!   (lowercase tokenization + Porter stemming).
//! * [`index`] — inverted index over messages, plus a virtual-document
//!   index over whole-thread concatenations; binary persistence.
//! * [`scoring`] — query-likelihood scoring and the bounded ranked pool.
//! * [`fusion`] — thread grouping, top-k truncation, and the aggregation
//!   methods.
//! * [`eval`] — metrics, significance tests, grid search, k sweeps, and
//!   TREC run files.
//! * [`synth`] — deterministic synthetic corpus generation.

pub mod corpus;
pub mod eval;
pub mod fusion;
pub mod index;
pub mod scoring;
pub mod synth;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use corpus::{Message, Qrels, Query, Thread};
pub use eval::{GridSpec, MetricReport, Metrics, Run, TTestResult};
pub use fusion::{AggregationMethod, KLimit, ThreadRanking};
pub use index::{Index, IndexKind};
pub use scoring::{NormalizedPool, RankedPool, ScoredMessage, SmoothingParams};
pub use synth::SynthSpec;
