//! Rank-based retrieval metrics over binarized judgments.
//!
//! Judgments are graded 0..2 but every metric here treats grade > 0 as
//! relevant. Average precision is computed over the full ranking with the
//! judged relevant count as denominator; precision and NDCG use a fixed
//! rank cutoff with the cutoff itself as denominator. Queries with no
//! relevant threads (or none judged) score zero rather than being
//! dropped, so means never divide by a moving target.

use std::collections::BTreeMap;

use crate::corpus::Qrels;
use crate::eval::run::Run;

/// The three reported metrics. Per query, `map` holds that query's
/// average precision; averaged over queries it is mean average precision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub map: f64,
    pub p10: f64,
    pub ndcg10: f64,
}

/// The fixed cutoff for P@10 and NDCG@10.
pub const REPORT_CUTOFF: usize = 10;

impl Metrics {
    pub fn for_query(qrels: &Qrels, query_id: &str, ranking: &[(String, f64)]) -> Metrics {
        Metrics::at_cutoff(qrels, query_id, ranking, REPORT_CUTOFF)
    }

    /// Like [`Metrics::for_query`] with an explicit rank cutoff for the
    /// precision and NDCG components (`map` is cutoff-free). The `p10`
    /// and `ndcg10` fields then hold the values at that cutoff.
    pub fn at_cutoff(
        qrels: &Qrels,
        query_id: &str,
        ranking: &[(String, f64)],
        cutoff: usize,
    ) -> Metrics {
        Metrics {
            map: average_precision(qrels, query_id, ranking),
            p10: precision_at(qrels, query_id, ranking, cutoff),
            ndcg10: ndcg_at(qrels, query_id, ranking, cutoff),
        }
    }

    /// Arithmetic mean; an empty slice yields zeros.
    pub fn mean(values: &[Metrics]) -> Metrics {
        if values.is_empty() {
            return Metrics::default();
        }
        let n = values.len() as f64;
        Metrics {
            map: values.iter().map(|m| m.map).sum::<f64>() / n,
            p10: values.iter().map(|m| m.p10).sum::<f64>() / n,
            ndcg10: values.iter().map(|m| m.ndcg10).sum::<f64>() / n,
        }
    }
}

/// Fraction of the top `cutoff` positions holding a relevant thread. The
/// denominator stays `cutoff` even when fewer threads were retrieved.
pub fn precision_at(
    qrels: &Qrels,
    query_id: &str,
    ranking: &[(String, f64)],
    cutoff: usize,
) -> f64 {
    let hits = ranking
        .iter()
        .take(cutoff)
        .filter(|(t, _)| qrels.is_relevant(query_id, t))
        .count();
    hits as f64 / cutoff as f64
}

/// Mean of precision at each relevant retrieved position, divided by the
/// total judged-relevant count. Zero when nothing relevant is judged.
pub fn average_precision(qrels: &Qrels, query_id: &str, ranking: &[(String, f64)]) -> f64 {
    let relevant_total = qrels.relevant_count(query_id);
    if relevant_total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, (thread_id, _)) in ranking.iter().enumerate() {
        if qrels.is_relevant(query_id, thread_id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant_total as f64
}

/// NDCG at a cutoff with binary gains and `log2(position + 1)` discounts.
/// The ideal ranking places all relevant threads first; a query with no
/// relevant threads scores zero.
pub fn ndcg_at(qrels: &Qrels, query_id: &str, ranking: &[(String, f64)], cutoff: usize) -> f64 {
    let discount = |position: usize| 1.0 / ((position + 1) as f64).log2();
    let dcg: f64 = ranking
        .iter()
        .take(cutoff)
        .enumerate()
        .filter(|(_, (t, _))| qrels.is_relevant(query_id, t))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let relevant_total = qrels.relevant_count(query_id);
    let ideal: f64 = (1..=relevant_total.min(cutoff)).map(discount).sum();
    if ideal == 0.0 {
        return 0.0;
    }
    dcg / ideal
}

/// Per-query metrics plus their mean, as produced for one run file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_query: BTreeMap<String, Metrics>,
    pub mean: Metrics,
    /// Rank cutoff the precision and NDCG columns were computed at.
    pub cutoff: usize,
}

/// Evaluate a run against judgments at the standard cutoff of 10. The
/// evaluation set is the set of queries present in the run.
pub fn evaluate_run(run: &Run, qrels: &Qrels) -> MetricReport {
    evaluate_run_at(run, qrels, REPORT_CUTOFF)
}

/// Evaluate a run with an explicit precision/NDCG cutoff.
pub fn evaluate_run_at(run: &Run, qrels: &Qrels, cutoff: usize) -> MetricReport {
    let per_query: BTreeMap<String, Metrics> = run
        .iter()
        .map(|(query_id, ranking)| {
            (
                query_id.clone(),
                Metrics::at_cutoff(qrels, query_id, ranking, cutoff),
            )
        })
        .collect();
    let values: Vec<Metrics> = per_query.values().copied().collect();
    MetricReport {
        per_query,
        mean: Metrics::mean(&values),
        cutoff,
    }
}

impl MetricReport {
    /// Tab-separated `query_id metric value` rows, queries in id order,
    /// followed by the `all` mean rows. Metric labels carry the cutoff,
    /// e.g. `p10` and `ndcg10`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let c = self.cutoff;
        let mut push = |query: &str, metrics: &Metrics| {
            out.push_str(&format!("{query}\tmap\t{:.6}\n", metrics.map));
            out.push_str(&format!("{query}\tp{c}\t{:.6}\n", metrics.p10));
            out.push_str(&format!("{query}\tndcg{c}\t{:.6}\n", metrics.ndcg10));
        };
        for (query_id, metrics) in &self.per_query {
            push(query_id, metrics);
        }
        push("all", &self.mean);
        out
    }
}
