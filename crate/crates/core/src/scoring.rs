//! Query-likelihood scoring with Dirichlet smoothing.
//!
//! A document's score is the log-likelihood of the query under the
//! document's smoothed unigram language model:
//!
//! ```text
//! log P(Q|D) = sum over query terms q of
//!              n(q,Q) * ln( (tf(q,D) + mu * P(q|C)) / (|D| + mu) )
//! ```
//!
//! where `n(q,Q)` is the term's count in the query, `tf(q,D)` its count in
//! the document, `|D|` the document length, and `P(q|C)` its background
//! probability in the collection. Query terms absent from the collection
//! have `P(q|C) = 0` and are skipped: they contribute a factor of one to
//! every document rather than sending all scores to negative infinity.
//!
//! Ranking is term-at-a-time over postings. Only documents containing at
//! least one query term are candidates; such a term necessarily has
//! `P(q|C) > 0`, so the skip rule and the candidate rule agree.

use std::collections::HashMap;

use crate::corpus::analyze;
use crate::index::{Index, IndexKind};
use crate::{Error, Result};

/// Dirichlet smoothing parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub mu: f64,
}

impl SmoothingParams {
    pub fn new(mu: f64) -> SmoothingParams {
        SmoothingParams { mu }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing parameter mu must be a positive finite number, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { mu: 1000.0 }
    }
}

/// One scored document. For a virtual-document index the document is a
/// whole thread and `message_id` equals `thread_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMessage {
    pub message_id: String,
    pub thread_id: String,
    pub log_score: f64,
}

/// Candidate documents ordered by log score descending, ties broken by
/// document id ascending.
pub type RankedPool = Vec<ScoredMessage>;

/// A pool entry after score normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMessage {
    pub message_id: String,
    pub thread_id: String,
    pub log_score: f64,
    /// `exp(log_score - max log_score)`, in (0, 1]; the pool's top entry
    /// gets exactly 1.0.
    pub score: f64,
    /// 1-based position in the pool.
    pub rank: u32,
}

pub type NormalizedPool = Vec<NormalizedMessage>;

/// Log-likelihood of the given query tokens under one document's model.
/// Tokens carry their multiplicity by repetition. The reference form of
/// the scoring formula: one log per token occurrence, no rearrangement.
pub fn log_query_likelihood(
    index: &Index,
    params: SmoothingParams,
    query_tokens: &[String],
    ordinal: u32,
) -> f64 {
    debug_assert!(params.validate().is_ok());
    let doc_len = index.doc_len(ordinal) as f64;
    let mut total = 0.0;
    for token in query_tokens {
        let p = index.collection_prob(token);
        if p == 0.0 {
            continue;
        }
        let tf = index.term_freq(token, ordinal) as f64;
        total += ((tf + params.mu * p) / (doc_len + params.mu)).ln();
    }
    total
}

/// Rank messages against a query, keeping at most `pool_size` candidates.
/// When fewer documents match, the pool is simply shorter; it is never
/// padded.
pub fn rank_messages(
    index: &Index,
    params: SmoothingParams,
    query_text: &str,
    pool_size: usize,
) -> Result<RankedPool> {
    expect_kind(index, IndexKind::Messages)?;
    rank(index, params, query_text, pool_size)
}

/// Rank whole threads via their virtual documents.
pub fn rank_virtual_docs(
    index: &Index,
    params: SmoothingParams,
    query_text: &str,
    pool_size: usize,
) -> Result<RankedPool> {
    expect_kind(index, IndexKind::VirtualDocs)?;
    rank(index, params, query_text, pool_size)
}

fn expect_kind(index: &Index, expected: IndexKind) -> Result<()> {
    if index.kind() != expected {
        return Err(Error::IndexKind {
            expected: expected.name(),
            found: index.kind().name(),
        });
    }
    Ok(())
}

fn rank(
    index: &Index,
    params: SmoothingParams,
    query_text: &str,
    pool_size: usize,
) -> Result<RankedPool> {
    params.validate()?;
    if pool_size == 0 {
        return Err(Error::InvalidParameter(
            "pool size must be at least 1".to_string(),
        ));
    }
    let mu = params.mu;

    // distinct query terms with their counts, in first-occurrence order so
    // accumulation order (and thus the exact floating-point result) is
    // reproducible
    let mut weighted: Vec<(String, f64)> = Vec::new();
    for token in analyze(query_text) {
        match weighted.iter_mut().find(|(t, _)| *t == token) {
            Some(entry) => entry.1 += 1.0,
            None => weighted.push((token, 1.0)),
        }
    }

    // score = base + acc[doc] - w_total * ln(|doc| + mu), where base
    // collects every term's smoothing-only contribution and acc holds each
    // candidate's corrections for the terms it actually contains
    let mut base = 0.0;
    let mut w_total = 0.0;
    let mut acc: HashMap<u32, f64> = HashMap::new();
    for (term, weight) in &weighted {
        let Some(postings) = index.postings(term) else {
            continue;
        };
        let mu_p = mu * index.collection_prob(term);
        base += weight * mu_p.ln();
        w_total += weight;
        for &(doc, tf) in postings {
            *acc.entry(doc).or_insert(0.0) += weight * ((tf as f64 + mu_p).ln() - mu_p.ln());
        }
    }

    let mut scored: Vec<(u32, f64)> = acc
        .into_iter()
        .map(|(doc, a)| {
            let score = base + a - w_total * (index.doc_len(doc) as f64 + mu).ln();
            (doc, score)
        })
        .collect();
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(pool_size);

    Ok(scored
        .into_iter()
        .map(|(doc, log_score)| ScoredMessage {
            message_id: index.doc_id(doc).to_string(),
            thread_id: index.thread_id(doc).to_string(),
            log_score,
        })
        .collect())
}

/// Shift-and-exponentiate pool scores into (0, 1]. The top entry maps to
/// exactly 1.0; relative order and ratios of likelihoods are preserved.
pub fn normalize_pool(pool: &RankedPool) -> NormalizedPool {
    let Some(max_log) = pool.first().map(|m| m.log_score) else {
        return Vec::new();
    };
    pool.iter()
        .enumerate()
        .map(|(i, m)| NormalizedMessage {
            message_id: m.message_id.clone(),
            thread_id: m.thread_id.clone(),
            log_score: m.log_score,
            score: (m.log_score - max_log).exp(),
            rank: (i + 1) as u32,
        })
        .collect()
}
