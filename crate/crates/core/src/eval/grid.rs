//! Parameter grid search with k-fold cross-validation, plus per-k sweeps.
//!
//! The searched parameters are the smoothing weight mu, the candidate
//! pool size, and the per-thread member cap k, for one aggregation
//! method. Metrics here are computed over the full query list: a query
//! whose pool comes back empty scores zero instead of dropping out, so a
//! parameter point can never look better by losing queries.
//!
//! Per query and mu, messages are ranked once at the largest pool size;
//! smaller pools are prefixes of that ranking, with identical ranks and
//! normalized scores, so the whole (pool, k) sub-grid reuses one ranking.
//! Queries are processed in parallel; every reduction is ordered, so
//! repeated runs produce identical results.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::corpus::{Qrels, Query};
use crate::eval::metrics::Metrics;
use crate::fusion::{run_method, AggregationMethod, KLimit};
use crate::index::Index;
use crate::scoring::{normalize_pool, rank_messages, SmoothingParams};
use crate::{Error, Result};

/// The parameter grid and fold count.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub mus: Vec<f64>,
    pub pools: Vec<usize>,
    pub ks: Vec<usize>,
    pub folds: usize,
    /// Folds cut the query list in sorted-id order unless this seed is
    /// set, in which case the sorted list is shuffled reproducibly first.
    pub shuffle_seed: Option<u64>,
}

impl Default for GridSpec {
    /// mu 500..4000 and pool 500..5000 in steps of 500, k 2..6, 5 folds:
    /// a 400-point grid.
    fn default() -> Self {
        GridSpec {
            mus: (1..=8).map(|i| i as f64 * 500.0).collect(),
            pools: (1..=10).map(|i| i * 500).collect(),
            ks: (2..=6).collect(),
            folds: 5,
            shuffle_seed: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.mus.is_empty() || self.pools.is_empty() || self.ks.is_empty() {
            return fail("grid axes must not be empty");
        }
        if self.mus.iter().any(|&mu| !mu.is_finite() || mu <= 0.0) {
            return fail("grid mu values must be positive and finite");
        }
        if self.pools.contains(&0) {
            return fail("grid pool sizes must be at least 1");
        }
        if self.ks.contains(&0) {
            return fail("grid k values must be at least 1");
        }
        if self.folds < 2 {
            return fail("cross-validation needs at least 2 folds");
        }
        Ok(())
    }

    fn combos(&self) -> Vec<ParamPoint> {
        let mut out = Vec::with_capacity(self.mus.len() * self.pools.len() * self.ks.len());
        for &mu in &self.mus {
            for &pool in &self.pools {
                for &k in &self.ks {
                    out.push(ParamPoint { mu, pool, k });
                }
            }
        }
        out
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    pub mu: f64,
    pub pool: usize,
    pub k: usize,
}

/// One fold's selection and held-out outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub test_queries: Vec<String>,
    /// The grid point with the highest training MAP; ties go to the
    /// earliest point in grid order (smallest mu, then pool, then k).
    pub best: ParamPoint,
    pub train_map: f64,
    /// Mean metrics over this fold's held-out queries at `best`.
    pub test: Metrics,
    /// Training MAP of every grid point, in grid order. This is the full
    /// selection trace, kept so the choice of `best` can be audited.
    pub train_map_by_combo: Vec<(ParamPoint, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub folds: Vec<FoldResult>,
    /// Mean over all queries of their held-out metrics (each query is in
    /// exactly one test fold).
    pub cv: Metrics,
    /// Each query's held-out metrics under its fold's selected point.
    pub per_query: BTreeMap<String, Metrics>,
}

/// Contiguous fold ranges over `n` items: the first `n % folds` folds get
/// the extra item.
fn fold_bounds(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / folds;
    let rem = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for i in 0..folds {
        let size = base + usize::from(i < rem);
        out.push(start..start + size);
        start += size;
    }
    out
}

fn sorted_unique_queries(queries: &[Query]) -> Result<Vec<Query>> {
    let mut sorted = queries.to_vec();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    for pair in sorted.windows(2) {
        if pair[0].query_id == pair[1].query_id {
            return Err(Error::InvalidParameter(format!(
                "duplicate query id {:?}",
                pair[0].query_id
            )));
        }
    }
    Ok(sorted)
}

/// Every grid point's metrics for one query, flattened in grid order.
fn query_surface(
    index: &Index,
    qrels: &Qrels,
    query: &Query,
    method: AggregationMethod,
    spec: &GridSpec,
) -> Result<Vec<Metrics>> {
    let max_pool = *spec.pools.iter().max().unwrap();
    let mut out = Vec::with_capacity(spec.mus.len() * spec.pools.len() * spec.ks.len());
    for &mu in &spec.mus {
        let ranked = rank_messages(index, SmoothingParams::new(mu), &query.text, max_pool)?;
        let normalized = normalize_pool(&ranked);
        for &pool in &spec.pools {
            let prefix = &normalized[..normalized.len().min(pool)];
            for &k in &spec.ks {
                let ranking = run_method(prefix, method, KLimit::Top(k));
                out.push(Metrics::for_query(qrels, &query.query_id, &ranking));
            }
        }
    }
    Ok(out)
}

fn all_surfaces(
    index: &Index,
    qrels: &Qrels,
    queries: &[Query],
    method: AggregationMethod,
    spec: &GridSpec,
) -> Result<Vec<Vec<Metrics>>> {
    queries
        .par_iter()
        .map(|q| query_surface(index, qrels, q, method, spec))
        .collect()
}

/// Select (mu, pool, k) per fold by training MAP and report held-out
/// metrics. Queries are folded in sorted-id order into contiguous blocks.
pub fn kfold_grid_search(
    index: &Index,
    queries: &[Query],
    qrels: &Qrels,
    method: AggregationMethod,
    spec: &GridSpec,
) -> Result<GridSearchResult> {
    spec.validate()?;
    let mut sorted = sorted_unique_queries(queries)?;
    if let Some(seed) = spec.shuffle_seed {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        sorted.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    }
    let n = sorted.len();
    if n < spec.folds {
        return Err(Error::NotEnoughQueries {
            queries: n,
            folds: spec.folds,
        });
    }

    let surfaces = all_surfaces(index, qrels, &sorted, method, spec)?;
    let combos = spec.combos();

    let mut folds = Vec::with_capacity(spec.folds);
    let mut per_query = BTreeMap::new();
    for (fold_idx, range) in fold_bounds(n, spec.folds).into_iter().enumerate() {
        let train: Vec<usize> = (0..n).filter(|i| !range.contains(i)).collect();

        let mut best_combo = 0usize;
        let mut best_map = f64::NEG_INFINITY;
        let mut trace = Vec::with_capacity(combos.len());
        for (ci, &point) in combos.iter().enumerate() {
            let mean_map: f64 =
                train.iter().map(|&qi| surfaces[qi][ci].map).sum::<f64>() / train.len() as f64;
            trace.push((point, mean_map));
            if mean_map > best_map {
                best_map = mean_map;
                best_combo = ci;
            }
        }

        let test_values: Vec<Metrics> = range.clone().map(|qi| surfaces[qi][best_combo]).collect();
        for qi in range.clone() {
            per_query.insert(sorted[qi].query_id.clone(), surfaces[qi][best_combo]);
        }
        folds.push(FoldResult {
            fold: fold_idx,
            test_queries: range.map(|qi| sorted[qi].query_id.clone()).collect(),
            best: combos[best_combo],
            train_map: best_map,
            test: Metrics::mean(&test_values),
            train_map_by_combo: trace,
        });
    }

    let all_values: Vec<Metrics> = per_query.values().copied().collect();
    Ok(GridSearchResult {
        folds,
        cv: Metrics::mean(&all_values),
        per_query,
    })
}

/// Mean metrics of every grid point over all queries, in grid order. No
/// fold structure; this is the full response surface.
pub fn full_grid_search(
    index: &Index,
    queries: &[Query],
    qrels: &Qrels,
    method: AggregationMethod,
    spec: &GridSpec,
) -> Result<Vec<(ParamPoint, Metrics)>> {
    spec.validate()?;
    let sorted = sorted_unique_queries(queries)?;
    if sorted.is_empty() {
        return Err(Error::InvalidParameter(
            "no queries to evaluate".to_string(),
        ));
    }
    let surfaces = all_surfaces(index, qrels, &sorted, method, spec)?;
    let combos = spec.combos();
    Ok(combos
        .into_iter()
        .enumerate()
        .map(|(ci, point)| {
            let values: Vec<Metrics> = surfaces.iter().map(|s| s[ci]).collect();
            (point, Metrics::mean(&values))
        })
        .collect())
}

/// Mean metrics for each k cap (then uncapped, as the final row) at fixed
/// mu and pool size.
pub fn sweep_k(
    index: &Index,
    queries: &[Query],
    qrels: &Qrels,
    method: AggregationMethod,
    mu: f64,
    pool: usize,
    ks: &[usize],
) -> Result<Vec<(KLimit, Metrics)>> {
    SmoothingParams::new(mu).validate()?;
    if pool == 0 {
        return Err(Error::InvalidParameter(
            "pool size must be at least 1".to_string(),
        ));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidParameter(
            "k values must be at least 1".to_string(),
        ));
    }
    let sorted = sorted_unique_queries(queries)?;
    if sorted.is_empty() {
        return Err(Error::InvalidParameter(
            "no queries to evaluate".to_string(),
        ));
    }

    let limits: Vec<KLimit> = ks
        .iter()
        .map(|&k| KLimit::Top(k))
        .chain(std::iter::once(KLimit::All))
        .collect();
    let per_query: Vec<Vec<Metrics>> = sorted
        .par_iter()
        .map(|query| -> Result<Vec<Metrics>> {
            let ranked = rank_messages(index, SmoothingParams::new(mu), &query.text, pool)?;
            let normalized = normalize_pool(&ranked);
            Ok(limits
                .iter()
                .map(|&limit| {
                    let ranking = run_method(&normalized, method, limit);
                    Metrics::for_query(qrels, &query.query_id, &ranking)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(limits
        .iter()
        .enumerate()
        .map(|(li, &limit)| {
            let values: Vec<Metrics> = per_query.iter().map(|v| v[li]).collect();
            (limit, Metrics::mean(&values))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_qrels, Message};
    use crate::index::build_index;

    fn msg(thread_id: &str, message_id: &str, position: u32, text: &str) -> Message {
        Message {
            thread_id: thread_id.to_string(),
            message_id: message_id.to_string(),
            position,
            text: text.to_string(),
        }
    }

    fn query(id: &str, text: &str) -> Query {
        Query {
            query_id: id.to_string(),
            text: text.to_string(),
        }
    }

    /// Four threads on two topics; each query's topic word appears in two
    /// threads.
    fn toy_setup() -> (Index, Vec<Query>, Qrels) {
        let messages = vec![
            msg("t1", "m01", 0, "apple pie recipe"),
            msg("t1", "m02", 1, "apple tart"),
            msg("t2", "m03", 0, "apple hardware"),
            msg("t3", "m04", 0, "banana bread recipe"),
            msg("t3", "m05", 1, "banana split"),
            msg("t4", "m06", 0, "banana republic"),
            msg("t4", "m07", 1, "posting noise words here"),
        ];
        let index = build_index(&messages).unwrap();
        let queries = vec![
            query("q1", "apple"),
            query("q2", "banana"),
            query("q3", "recipe"),
            query("q4", "noise"),
        ];
        let qrels = parse_qrels(concat!(
            "q1 0 t1 2\nq1 0 t2 1\n",
            "q2 0 t3 2\nq2 0 t4 1\n",
            "q3 0 t1 1\nq3 0 t3 1\n",
            "q4 0 t4 1\n",
        ))
        .unwrap();
        (index, queries, qrels)
    }

    fn small_spec() -> GridSpec {
        GridSpec {
            mus: vec![1.0, 10.0],
            pools: vec![2, 5],
            ks: vec![1, 2],
            folds: 2,
            shuffle_seed: None,
        }
    }

    #[test]
    fn fold_bounds_distribute_the_remainder_to_early_folds() {
        let sizes = |n, f| {
            fold_bounds(n, f)
                .into_iter()
                .map(|r| r.len())
                .collect::<Vec<_>>()
        };
        assert_eq!(sizes(10, 5), [2, 2, 2, 2, 2]);
        assert_eq!(sizes(11, 5), [3, 2, 2, 2, 2]);
        assert_eq!(sizes(13, 5), [3, 3, 3, 2, 2]);
        assert_eq!(sizes(5, 5), [1, 1, 1, 1, 1]);
        // ranges tile [0, n)
        let bounds = fold_bounds(11, 5);
        assert_eq!(bounds[0], 0..3);
        assert_eq!(bounds[4], 9..11);
    }

    #[test]
    fn too_few_queries_is_an_error() {
        let (index, queries, qrels) = toy_setup();
        let mut spec = small_spec();
        spec.folds = 5;
        assert!(matches!(
            kfold_grid_search(&index, &queries, &qrels, AggregationMethod::CombSum, &spec),
            Err(Error::NotEnoughQueries {
                queries: 4,
                folds: 5
            })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_specs = [
            GridSpec {
                mus: vec![],
                ..small_spec()
            },
            GridSpec {
                mus: vec![-1.0],
                ..small_spec()
            },
            GridSpec {
                pools: vec![0],
                ..small_spec()
            },
            GridSpec {
                ks: vec![0],
                ..small_spec()
            },
            GridSpec {
                folds: 1,
                ..small_spec()
            },
        ];
        for spec in bad_specs {
            assert!(spec.validate().is_err());
        }
    }

    #[test]
    fn search_is_deterministic_and_partitions_queries() {
        let (index, queries, qrels) = toy_setup();
        let spec = small_spec();
        let method = AggregationMethod::CombSum;
        let a = kfold_grid_search(&index, &queries, &qrels, method, &spec).unwrap();
        let b = kfold_grid_search(&index, &queries, &qrels, method, &spec).unwrap();
        assert_eq!(a, b);

        assert_eq!(a.folds.len(), 2);
        let mut seen: Vec<&str> = a
            .folds
            .iter()
            .flat_map(|f| f.test_queries.iter().map(String::as_str))
            .collect();
        seen.sort();
        assert_eq!(seen, ["q1", "q2", "q3", "q4"]);
        assert_eq!(a.per_query.len(), 4);
        // input order must not matter
        let mut shuffled = queries.clone();
        shuffled.reverse();
        let c = kfold_grid_search(&index, &shuffled, &qrels, method, &spec).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn seeded_shuffle_refolds_deterministically() {
        let (index, queries, qrels) = toy_setup();
        let method = AggregationMethod::CombSum;
        let baseline = kfold_grid_search(&index, &queries, &qrels, method, &small_spec()).unwrap();
        let spec = GridSpec {
            shuffle_seed: Some(7),
            ..small_spec()
        };
        let a = kfold_grid_search(&index, &queries, &qrels, method, &spec).unwrap();
        let b = kfold_grid_search(&index, &queries, &qrels, method, &spec).unwrap();
        assert_eq!(a, b);
        // still a partition of the query set
        let mut seen: Vec<&str> = a
            .folds
            .iter()
            .flat_map(|f| f.test_queries.iter().map(String::as_str))
            .collect();
        seen.sort();
        assert_eq!(seen, ["q1", "q2", "q3", "q4"]);
        // this seed actually rearranges the folds
        assert_ne!(
            a.folds[0].test_queries, baseline.folds[0].test_queries,
            "seed 7 should move some query across folds"
        );
    }

    #[test]
    fn best_point_is_the_argmax_of_its_selection_trace() {
        let (index, queries, qrels) = toy_setup();
        let result = kfold_grid_search(
            &index,
            &queries,
            &qrels,
            AggregationMethod::CombSum,
            &small_spec(),
        )
        .unwrap();
        for fold in &result.folds {
            assert_eq!(fold.train_map_by_combo.len(), 8);
            let max = fold
                .train_map_by_combo
                .iter()
                .map(|&(_, m)| m)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(fold.train_map, max);
            // best is the earliest combo reaching the max
            let first = fold
                .train_map_by_combo
                .iter()
                .find(|&&(_, m)| m == max)
                .unwrap();
            assert_eq!(fold.best, first.0);
        }
    }

    #[test]
    fn constant_surface_selects_the_first_grid_point() {
        let (index, queries, _) = toy_setup();
        // no judgments at all: every AP is 0, so the tie rule decides
        let qrels = Qrels::new();
        let spec = small_spec();
        let result =
            kfold_grid_search(&index, &queries, &qrels, AggregationMethod::CombSum, &spec).unwrap();
        for fold in &result.folds {
            assert_eq!(
                fold.best,
                ParamPoint {
                    mu: 1.0,
                    pool: 2,
                    k: 1
                }
            );
            assert_eq!(fold.train_map, 0.0);
        }
        assert_eq!(result.cv, Metrics::default());
    }

    #[test]
    fn cv_mean_averages_per_query_values() {
        let (index, queries, qrels) = toy_setup();
        let result = kfold_grid_search(
            &index,
            &queries,
            &qrels,
            AggregationMethod::CombSum,
            &small_spec(),
        )
        .unwrap();
        let values: Vec<Metrics> = result.per_query.values().copied().collect();
        assert_eq!(result.cv, Metrics::mean(&values));
    }

    #[test]
    fn full_surface_has_one_row_per_combo_in_grid_order() {
        let (index, queries, qrels) = toy_setup();
        let spec = small_spec();
        let surface =
            full_grid_search(&index, &queries, &qrels, AggregationMethod::CombSum, &spec).unwrap();
        assert_eq!(surface.len(), 8);
        assert_eq!(
            surface[0].0,
            ParamPoint {
                mu: 1.0,
                pool: 2,
                k: 1
            }
        );
        assert_eq!(
            surface[7].0,
            ParamPoint {
                mu: 10.0,
                pool: 5,
                k: 2
            }
        );
        for (_, m) in &surface {
            assert!(m.map >= 0.0 && m.map <= 1.0);
        }
    }

    #[test]
    fn sweep_rows_are_ks_then_basic() {
        let (index, queries, qrels) = toy_setup();
        let rows = sweep_k(
            &index,
            &queries,
            &qrels,
            AggregationMethod::CombSum,
            10.0,
            5,
            &[2, 3],
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].0, KLimit::Top(2));
        assert_eq!(rows[1].0, KLimit::Top(3));
        assert_eq!(rows[2].0, KLimit::All);
        // no thread has more than 2 pooled messages here, so k=3 and
        // basic cannot differ
        assert_eq!(rows[1].1, rows[2].1);
    }

    #[test]
    fn queries_scoring_nothing_still_count_as_zero() {
        let (index, _, qrels) = toy_setup();
        let queries = vec![query("q1", "apple"), query("qz", "zzzz")];
        let rows = sweep_k(
            &index,
            &queries,
            &qrels,
            AggregationMethod::CombSum,
            10.0,
            5,
            &[2],
        )
        .unwrap();
        // the mean halves because qz retrieves nothing and scores zero
        let solo = sweep_k(
            &index,
            &queries[..1],
            &qrels,
            AggregationMethod::CombSum,
            10.0,
            5,
            &[2],
        )
        .unwrap();
        assert!((rows[0].1.map - solo[0].1.map / 2.0).abs() < 1e-12);
    }
}
