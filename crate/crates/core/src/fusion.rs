//! Fusing a ranked message pool into a thread ranking.
//!
//! Each thread is represented by the subset of its messages that made the
//! pool, optionally truncated to the thread's top k. A thread whose
//! messages fall outside the pool is simply absent; a thread with fewer
//! than k pooled messages keeps what it has. The truncated member set is
//! then collapsed to one score per thread by an aggregation method.
//!
//! Methods come in two families. Rank-style methods (votes, reciprocal
//! rank, Borda) look only at pool membership and positions. Score-style
//! methods (the Comb family and its exponentiated variants) combine the
//! normalized scores, which live in (0, 1] with the pool's best message
//! at exactly 1.

use std::str::FromStr;

use crate::scoring::NormalizedMessage;
use crate::Error;

/// How many of a thread's pooled messages contribute to its score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KLimit {
    /// Every pooled message of the thread counts.
    All,
    /// Only the thread's top k pooled messages count (k >= 1).
    Top(usize),
}

impl KLimit {
    fn cap(self) -> usize {
        match self {
            KLimit::All => usize::MAX,
            KLimit::Top(k) => k,
        }
    }

    /// The label used in command lines and run tags: `basic` or the number.
    pub fn label(self) -> String {
        match self {
            KLimit::All => "basic".to_string(),
            KLimit::Top(k) => k.to_string(),
        }
    }
}

impl FromStr for KLimit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.eq_ignore_ascii_case("basic")
            || s.eq_ignore_ascii_case("all")
            || s.eq_ignore_ascii_case("unlimited")
        {
            return Ok(KLimit::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KLimit::Top(k)),
            _ => Err(Error::InvalidParameter(format!(
                "k must be a positive integer or \"unlimited\", got {s:?}"
            ))),
        }
    }
}

/// The thirteen ways to collapse a thread's member scores into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregationMethod {
    /// Number of pooled members.
    Votes,
    /// Sum of reciprocal pool ranks.
    ReciprocalRank,
    /// Sum of (pool size - rank) over members.
    BordaFuse,
    CombMin,
    CombMax,
    /// Median member score; an even count takes the mean of the middle two.
    CombMed,
    CombSum,
    /// Arithmetic mean of member scores.
    CombAnz,
    /// Geometric mean of member scores.
    CombGnz,
    /// Member count times CombSum.
    CombMnz,
    ExpCombSum,
    ExpCombAnz,
    ExpCombMnz,
}

impl AggregationMethod {
    pub const ALL: [AggregationMethod; 13] = [
        AggregationMethod::Votes,
        AggregationMethod::ReciprocalRank,
        AggregationMethod::BordaFuse,
        AggregationMethod::CombMin,
        AggregationMethod::CombMax,
        AggregationMethod::CombMed,
        AggregationMethod::CombSum,
        AggregationMethod::CombAnz,
        AggregationMethod::CombGnz,
        AggregationMethod::CombMnz,
        AggregationMethod::ExpCombSum,
        AggregationMethod::ExpCombAnz,
        AggregationMethod::ExpCombMnz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregationMethod::Votes => "votes",
            AggregationMethod::ReciprocalRank => "rr",
            AggregationMethod::BordaFuse => "bordafuse",
            AggregationMethod::CombMin => "combmin",
            AggregationMethod::CombMax => "combmax",
            AggregationMethod::CombMed => "combmed",
            AggregationMethod::CombSum => "combsum",
            AggregationMethod::CombAnz => "combanz",
            AggregationMethod::CombGnz => "combgnz",
            AggregationMethod::CombMnz => "combmnz",
            AggregationMethod::ExpCombSum => "expcombsum",
            AggregationMethod::ExpCombAnz => "expcombanz",
            AggregationMethod::ExpCombMnz => "expcombmnz",
        }
    }

    /// False for the membership- and rank-based methods, whose output is
    /// unchanged by any strictly increasing rescoring of the pool.
    pub fn uses_scores(self) -> bool {
        !matches!(
            self,
            AggregationMethod::Votes
                | AggregationMethod::ReciprocalRank
                | AggregationMethod::BordaFuse
        )
    }
}

impl std::fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let lower = s.to_ascii_lowercase();
        let name = if lower == "borda" {
            "bordafuse"
        } else {
            lower.as_str()
        };
        AggregationMethod::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown aggregation method {s:?}")))
    }
}

/// One thread's pooled messages, as indices into the pool. The pool is
/// score-ordered, so members are ascending and the best member is first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadGroup {
    pub thread_id: String,
    pub members: Vec<usize>,
}

/// Threads scored and ordered: score descending, thread id ascending on
/// ties.
pub type ThreadRanking = Vec<(String, f64)>;

/// Group pool entries by thread, keeping each thread's top `k` members.
/// Groups appear in order of their best member; no padding happens when a
/// thread has fewer members than the cap. Works on any score-ordered
/// prefix of a pool.
pub fn group_by_thread(pool: &[NormalizedMessage], k: KLimit) -> Vec<ThreadGroup> {
    let cap = k.cap();
    let mut groups: Vec<ThreadGroup> = Vec::new();
    let mut by_thread: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for (i, entry) in pool.iter().enumerate() {
        let slot = *by_thread.entry(&entry.thread_id).or_insert_with(|| {
            groups.push(ThreadGroup {
                thread_id: entry.thread_id.clone(),
                members: Vec::new(),
            });
            groups.len() - 1
        });
        if groups[slot].members.len() < cap {
            groups[slot].members.push(i);
        }
    }
    groups
}

/// Collapse one thread's member set into a single score.
pub fn aggregate(
    method: AggregationMethod,
    group: &ThreadGroup,
    pool: &[NormalizedMessage],
) -> f64 {
    assert!(!group.members.is_empty(), "thread group with no members");
    let n = group.members.len() as f64;
    let scores = || group.members.iter().map(|&i| pool[i].score);
    let sum = || scores().sum::<f64>();
    let exp_sum = || scores().map(f64::exp).sum::<f64>();
    match method {
        AggregationMethod::Votes => n,
        AggregationMethod::ReciprocalRank => group
            .members
            .iter()
            .map(|&i| 1.0 / pool[i].rank as f64)
            .sum(),
        AggregationMethod::BordaFuse => {
            let pool_size = pool.len() as f64;
            group
                .members
                .iter()
                .map(|&i| pool_size - pool[i].rank as f64)
                .sum()
        }
        AggregationMethod::CombMin => scores().fold(f64::INFINITY, f64::min),
        AggregationMethod::CombMax => scores().fold(f64::NEG_INFINITY, f64::max),
        AggregationMethod::CombMed => {
            // members are in pool order, so their scores are already sorted
            let m: Vec<f64> = scores().collect();
            let mid = m.len() / 2;
            if m.len() % 2 == 1 {
                m[mid]
            } else {
                (m[mid - 1] + m[mid]) / 2.0
            }
        }
        AggregationMethod::CombSum => sum(),
        AggregationMethod::CombAnz => sum() / n,
        AggregationMethod::CombGnz => (scores().map(f64::ln).sum::<f64>() / n).exp(),
        AggregationMethod::CombMnz => n * sum(),
        AggregationMethod::ExpCombSum => exp_sum(),
        AggregationMethod::ExpCombAnz => exp_sum() / n,
        AggregationMethod::ExpCombMnz => n * exp_sum(),
    }
}

/// Score every thread present in the pool with one method and k limit.
pub fn run_method(
    pool: &[NormalizedMessage],
    method: AggregationMethod,
    k: KLimit,
) -> ThreadRanking {
    let groups = group_by_thread(pool, k);
    let mut ranking: Vec<(String, f64)> = groups
        .iter()
        .map(|g| (g.thread_id.clone(), aggregate(method, g, pool)))
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranking
}

/// Full pipeline for one query: rank messages, normalize the pool, and
/// fuse it into a thread ranking.
pub fn rank_threads(
    index: &crate::Index,
    params: crate::scoring::SmoothingParams,
    query_text: &str,
    pool_size: usize,
    method: AggregationMethod,
    k: KLimit,
) -> crate::Result<ThreadRanking> {
    let pool = crate::scoring::rank_messages(index, params, query_text, pool_size)?;
    let normalized = crate::scoring::normalize_pool(&pool);
    Ok(run_method(&normalized, method, k))
}
