//! End-to-end exercise of the public API: generate a corpus, index it,
//! rank and fuse, evaluate, compare methods, and round-trip every
//! serialized artifact along the way.

use threadfuse_core::corpus::{parse_corpus, parse_qrels, parse_queries};
use threadfuse_core::eval::{
    evaluate_run, format_run, kfold_grid_search, paired_t_test, parse_run, sweep_k,
};
use threadfuse_core::fusion::rank_threads;
use threadfuse_core::index::{build_index, build_virtual_docs};
use threadfuse_core::scoring::rank_virtual_docs;
use threadfuse_core::{
    AggregationMethod, GridSpec, Index, KLimit, Qrels, Query, Run, SmoothingParams, SynthSpec,
};

fn small_corpus() -> (Vec<threadfuse_core::Message>, Vec<Query>, Qrels) {
    let spec = SynthSpec {
        seed: 7,
        threads: 60,
        queries: 8,
        ..SynthSpec::default()
    };
    let generated = spec.generate().expect("generation");
    let messages = parse_corpus(&generated.corpus_jsonl).expect("corpus parses");
    let queries = parse_queries(&generated.queries_tsv).expect("queries parse");
    let qrels = parse_qrels(&generated.qrels).expect("qrels parse");
    (messages, queries, qrels)
}

fn run_for(index: &Index, queries: &[Query], method: AggregationMethod, k: KLimit) -> Run {
    let mut run = Run::new();
    for query in queries {
        let ranking = rank_threads(
            index,
            SmoothingParams::new(1000.0),
            &query.text,
            1000,
            method,
            k,
        )
        .expect("ranking");
        run.insert(query.query_id.clone(), ranking);
    }
    run
}

#[test]
fn generated_corpus_flows_through_the_whole_pipeline() {
    let (messages, queries, qrels) = small_corpus();
    let index = build_index(&messages).expect("index");

    let run = run_for(&index, &queries, AggregationMethod::CombSum, KLimit::Top(3));
    assert_eq!(run.len(), queries.len());
    for ranking in run.values() {
        assert!(!ranking.is_empty(), "every query should retrieve something");
        for pair in ranking.windows(2) {
            assert!(
                pair[0].1 >= pair[1].1,
                "thread scores must be non-increasing"
            );
        }
    }

    let report = evaluate_run(&run, &qrels);
    assert_eq!(report.per_query.len(), run.len());
    for metrics in report.per_query.values() {
        for value in [metrics.map, metrics.p10, metrics.ndcg10] {
            assert!((0.0..=1.0).contains(&value), "metric out of range: {value}");
        }
    }
    // Topical queries against their own corpus should do clearly better
    // than chance on a 60-thread collection.
    assert!(report.mean.map > 0.3, "MAP {} too low", report.mean.map);
}

#[test]
fn run_files_round_trip_exactly() {
    let (messages, queries, qrels) = small_corpus();
    let index = build_index(&messages).expect("index");
    let run = run_for(&index, &queries, AggregationMethod::CombMnz, KLimit::Top(2));

    let text = format_run(&run, "combmnz_k2", &["demo header".to_string()]);
    let reparsed = parse_run(&text).expect("parse back");
    assert_eq!(reparsed.len(), run.len());
    for (query_id, ranking) in &run {
        let back = &reparsed[query_id];
        assert_eq!(back.len(), ranking.len());
        for (orig, round) in ranking.iter().zip(back) {
            assert_eq!(orig.0, round.0);
            // scores pass through a fixed six-decimal rendering
            assert!((orig.1 - round.1).abs() < 5e-7);
        }
    }

    // formatting the reparsed run reproduces the data section byte for byte
    let text2 = format_run(&reparsed, "combmnz_k2", &["demo header".to_string()]);
    assert_eq!(text, text2);

    let _ = evaluate_run(&reparsed, &qrels);
}

#[test]
fn persisted_index_ranks_identically() {
    let (messages, queries, _) = small_corpus();
    let index = build_index(&messages).expect("index");
    let dir = tempfile::tempdir().expect("tempdir");
    index.save(dir.path()).expect("save");
    let loaded = Index::load(dir.path()).expect("load");

    for query in &queries {
        for method in [AggregationMethod::Votes, AggregationMethod::ExpCombAnz] {
            let a = rank_threads(
                &index,
                SmoothingParams::new(800.0),
                &query.text,
                500,
                method,
                KLimit::All,
            )
            .expect("ranking");
            let b = rank_threads(
                &loaded,
                SmoothingParams::new(800.0),
                &query.text,
                500,
                method,
                KLimit::All,
            )
            .expect("ranking");
            assert_eq!(a, b, "loaded index diverged for {}", query.query_id);
        }
    }
}

#[test]
fn virtual_documents_rank_threads_directly() {
    let (messages, queries, qrels) = small_corpus();
    let vd = build_virtual_docs(&messages).expect("virtual docs");

    let mut run = Run::new();
    for query in &queries {
        let pool = rank_virtual_docs(
            &vd,
            SmoothingParams::new(1000.0),
            &query.text,
            vd.num_docs(),
        )
        .expect("vd ranking");
        let ranking: Vec<(String, f64)> = pool
            .into_iter()
            .map(|m| (m.thread_id, m.log_score))
            .collect();
        run.insert(query.query_id.clone(), ranking);
    }
    let report = evaluate_run(&run, &qrels);
    assert!(report.mean.map > 0.3, "MAP {} too low", report.mean.map);
}

#[test]
fn method_comparison_produces_a_finite_test_statistic() {
    let (messages, queries, qrels) = small_corpus();
    let index = build_index(&messages).expect("index");

    let run_a = run_for(&index, &queries, AggregationMethod::CombSum, KLimit::Top(3));
    let run_b = run_for(&index, &queries, AggregationMethod::Votes, KLimit::Top(3));
    let report_a = evaluate_run(&run_a, &qrels);
    let report_b = evaluate_run(&run_b, &qrels);

    let ids: Vec<&String> = report_a.per_query.keys().collect();
    let a: Vec<f64> = ids.iter().map(|id| report_a.per_query[*id].map).collect();
    let b: Vec<f64> = ids.iter().map(|id| report_b.per_query[*id].map).collect();
    let result = paired_t_test(&a, &b).expect("t-test");

    assert!((0.0..=1.0).contains(&result.p));
    assert_eq!(result.df, (ids.len() - 1) as f64);
    assert_eq!(result.significant, result.p < 0.05);
}

#[test]
fn sweeps_and_grid_search_are_deterministic() {
    let (messages, queries, qrels) = small_corpus();
    let index = build_index(&messages).expect("index");

    let ks = [2usize, 3, 4];
    let sweep1 = sweep_k(
        &index,
        &queries,
        &qrels,
        AggregationMethod::CombSum,
        1000.0,
        1000,
        &ks,
    )
    .expect("sweep");
    let sweep2 = sweep_k(
        &index,
        &queries,
        &qrels,
        AggregationMethod::CombSum,
        1000.0,
        1000,
        &ks,
    )
    .expect("sweep");
    assert_eq!(
        sweep1.len(),
        ks.len() + 1,
        "per-k rows plus the uncapped row"
    );
    for (a, b) in sweep1.iter().zip(&sweep2) {
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1, "sweep must be bit-for-bit repeatable");
    }

    let spec = GridSpec {
        mus: vec![500.0, 2000.0],
        pools: vec![200, 1000],
        ks: vec![2, 4],
        folds: 4,
        shuffle_seed: None,
    };
    let g1 = kfold_grid_search(&index, &queries, &qrels, AggregationMethod::CombMnz, &spec)
        .expect("grid");
    let g2 = kfold_grid_search(&index, &queries, &qrels, AggregationMethod::CombMnz, &spec)
        .expect("grid");
    assert_eq!(g1.cv, g2.cv);
    assert_eq!(g1.folds.len(), 4);
    for (fa, fb) in g1.folds.iter().zip(&g2.folds) {
        assert_eq!(fa.best, fb.best);
        assert_eq!(fa.test, fb.test);
    }
    // every query is held out exactly once
    let held: usize = g1.folds.iter().map(|f| f.test_queries.len()).sum();
    assert_eq!(held, queries.len());
}
