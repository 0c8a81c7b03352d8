//! `threadfuse`: index forum threads, rank them by fused message scores,
//! and run the surrounding evaluation workflow (metric reports, paired
//! t-tests, cross-validated grid search, per-k sweeps, and synthetic
//! corpus generation).
//!
//! Every text artifact starts with `# ` comment lines recording the tool
//! version and the full flag set, and contains nothing run-dependent, so
//! identical invocations write byte-identical files.
//!
//! Exit codes: 0 on success, 1 on a usage error (bad flags or parameter
//! values), 2 on a data error (unreadable or malformed inputs).

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use output::{header, read_text, with_header, write_atomic};
use threadfuse_core::corpus::{parse_corpus, parse_qrels, parse_queries};
use threadfuse_core::eval::{
    evaluate_run_at, format_run, full_grid_search, kfold_grid_search, paired_t_test, parse_run,
    sweep_k,
};
use threadfuse_core::fusion::rank_threads;
use threadfuse_core::index::{build_index, build_virtual_docs};
use threadfuse_core::scoring::rank_virtual_docs;
use threadfuse_core::{
    AggregationMethod, Error, GridSpec, Index, KLimit, Metrics, Qrels, Result, Run,
    SmoothingParams, SynthSpec,
};

#[derive(Parser)]
#[command(
    name = "threadfuse",
    version,
    about = "Thread retrieval by fusing per-message query-likelihood scores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a message index (or, with --virtual-docs, a whole-thread
    /// virtual-document index) and persist it to a directory.
    Index {
        /// Corpus file, one JSON message per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Output index directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Concatenate each thread into one virtual document.
        #[arg(long)]
        virtual_docs: bool,
    },
    /// Rank threads for every query and write a TREC-format run file.
    Search {
        /// Message index directory.
        #[arg(long)]
        index: PathBuf,
        /// Query file, `query_id<TAB>text` per line.
        #[arg(long)]
        queries: PathBuf,
        /// Aggregation method (votes, rr, bordafuse, combmin, combmax,
        /// combmed, combsum, combanz, combgnz, combmnz, expcombsum,
        /// expcombanz, expcombmnz).
        #[arg(long, value_parser = parse_method)]
        method: AggregationMethod,
        /// Top-k cap per thread: a positive integer, or "unlimited" for
        /// basic mode.
        #[arg(long, default_value = "unlimited", value_parser = parse_k)]
        k: KLimit,
        /// Dirichlet smoothing parameter.
        #[arg(long, default_value_t = 1000.0)]
        mu: f64,
        /// Message pool size per query.
        #[arg(long, default_value_t = 1000)]
        pool: usize,
        /// Output run file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank whole threads as virtual documents and write a run file.
    VdSearch {
        /// Virtual-document index directory.
        #[arg(long)]
        index: PathBuf,
        /// Query file, `query_id<TAB>text` per line.
        #[arg(long)]
        queries: PathBuf,
        /// Dirichlet smoothing parameter.
        #[arg(long, default_value_t = 1000.0)]
        mu: f64,
        /// Output run file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a run file against judgments and print a metric report.
    Eval {
        /// Run file to evaluate.
        #[arg(long)]
        run: PathBuf,
        /// Qrels file, `query_id 0 thread_id grade` per line.
        #[arg(long)]
        qrels: PathBuf,
        /// Rank cutoff for the precision and NDCG columns.
        #[arg(long, default_value_t = 10)]
        cutoff: usize,
    },
    /// Compare two runs with a paired two-tailed t-test.
    Ttest {
        /// First run file (positive t means it wins).
        #[arg(long)]
        run_a: PathBuf,
        /// Second run file.
        #[arg(long)]
        run_b: PathBuf,
        /// Qrels file.
        #[arg(long)]
        qrels: PathBuf,
        /// Metric to pair per query.
        #[arg(long, value_enum)]
        metric: MetricName,
    },
    /// Tune (mu, pool, k) by exhaustive grid search.
    Gridsearch {
        /// Message index directory.
        #[arg(long)]
        index: PathBuf,
        /// Query file.
        #[arg(long)]
        queries: PathBuf,
        /// Qrels file.
        #[arg(long)]
        qrels: PathBuf,
        /// Aggregation method.
        #[arg(long, value_parser = parse_method)]
        method: AggregationMethod,
        /// Grid of mu values.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "500,1000,1500,2000,2500,3000,3500,4000"
        )]
        mus: Vec<f64>,
        /// Grid of pool sizes.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "500,1000,1500,2000,2500,3000,3500,4000,4500,5000"
        )]
        pools: Vec<usize>,
        /// Grid of k caps.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        ks: Vec<usize>,
        /// Cross-validation fold count.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// cv: per-fold selections and held-out means. full: the whole
        /// response surface over all queries, no folding.
        #[arg(long, value_enum, default_value_t = ReportMode::Cv)]
        report: ReportMode,
        /// Shuffle queries with this seed before folding (default: folds
        /// cut the sorted query ids into contiguous blocks).
        #[arg(long)]
        shuffle_seed: Option<u64>,
    },
    /// Evaluate one method at each k in a range, plus basic mode.
    Sweep {
        /// Message index directory.
        #[arg(long)]
        index: PathBuf,
        /// Query file.
        #[arg(long)]
        queries: PathBuf,
        /// Qrels file.
        #[arg(long)]
        qrels: PathBuf,
        /// Aggregation method.
        #[arg(long, value_parser = parse_method)]
        method: AggregationMethod,
        /// Dirichlet smoothing parameter.
        #[arg(long, default_value_t = 1000.0)]
        mu: f64,
        /// Message pool size per query.
        #[arg(long, default_value_t = 1000)]
        pool: usize,
        /// Smallest k cap.
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        /// Largest k cap.
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic corpus with queries and judgments.
    Synth {
        /// RNG seed; everything is a pure function of the flag set.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of threads.
        #[arg(long, default_value_t = 200)]
        threads: usize,
        /// Number of queries.
        #[arg(long, default_value_t = 10)]
        queries: usize,
        /// Fraction of each thread's messages that are on-topic.
        #[arg(long, default_value_t = 0.3)]
        concentration: f64,
        /// Output directory for corpus.jsonl, queries.tsv, qrels.txt.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum MetricName {
    Map,
    P10,
    Ndcg10,
}

impl MetricName {
    fn label(self) -> &'static str {
        match self {
            MetricName::Map => "map",
            MetricName::P10 => "p10",
            MetricName::Ndcg10 => "ndcg10",
        }
    }

    fn pick(self, m: &Metrics) -> f64 {
        match self {
            MetricName::Map => m.map,
            MetricName::P10 => m.p10,
            MetricName::Ndcg10 => m.ndcg10,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum ReportMode {
    Cv,
    Full,
}

fn parse_method(s: &str) -> std::result::Result<AggregationMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_k(s: &str) -> std::result::Result<KLimit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful outcomes; everything
            // else clap rejects is a usage error.
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Usage errors (bad parameter values) exit 1; everything arising from
/// file contents or I/O exits 2.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_)
        | Error::NotEnoughQueries { .. }
        | Error::VocabularyTooSmall { .. } => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Index {
            corpus,
            out,
            virtual_docs,
        } => cmd_index(&corpus, &out, virtual_docs),
        Command::Search {
            index,
            queries,
            method,
            k,
            mu,
            pool,
            out,
        } => cmd_search(&index, &queries, method, k, mu, pool, &out),
        Command::VdSearch {
            index,
            queries,
            mu,
            out,
        } => cmd_vd_search(&index, &queries, mu, &out),
        Command::Eval { run, qrels, cutoff } => cmd_eval(&run, &qrels, cutoff),
        Command::Ttest {
            run_a,
            run_b,
            qrels,
            metric,
        } => cmd_ttest(&run_a, &run_b, &qrels, metric),
        Command::Gridsearch {
            index,
            queries,
            qrels,
            method,
            mus,
            pools,
            ks,
            folds,
            report,
            shuffle_seed,
        } => {
            let spec = GridSpec {
                mus,
                pools,
                ks,
                folds,
                shuffle_seed,
            };
            cmd_gridsearch(&index, &queries, &qrels, method, &spec, report)
        }
        Command::Sweep {
            index,
            queries,
            qrels,
            method,
            mu,
            pool,
            k_min,
            k_max,
            out,
        } => cmd_sweep(
            &index, &queries, &qrels, method, mu, pool, k_min, k_max, &out,
        ),
        Command::Synth {
            seed,
            threads,
            queries,
            concentration,
            out,
        } => cmd_synth(seed, threads, queries, concentration, &out),
    }
}

fn load_queries(path: &Path) -> Result<Vec<threadfuse_core::Query>> {
    parse_queries(&read_text(path)?)
}

fn load_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&read_text(path)?)
}

fn load_run(path: &Path) -> Result<Run> {
    parse_run(&read_text(path)?)
}

fn cmd_index(corpus: &Path, out: &Path, virtual_docs: bool) -> Result<()> {
    let messages = parse_corpus(&read_text(corpus)?)?;
    let index = if virtual_docs {
        build_virtual_docs(&messages)?
    } else {
        build_index(&messages)?
    };
    index.save(out)?;

    let head = header(
        "index",
        &[
            ("corpus", corpus.display().to_string()),
            ("virtual_docs", virtual_docs.to_string()),
        ],
    );
    let manifest = format!(
        "kind={}\ndocuments={}\nterms={}\ntokens={}\n",
        index.kind().name(),
        index.num_docs(),
        index.num_terms(),
        index.total_tokens()
    );
    write_atomic(&out.join("manifest.txt"), &with_header(&head, &manifest))?;
    println!(
        "indexed {} {} ({} terms, {} tokens) into {}",
        index.num_docs(),
        if virtual_docs { "threads" } else { "messages" },
        index.num_terms(),
        index.total_tokens(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    index_dir: &Path,
    queries: &Path,
    method: AggregationMethod,
    k: KLimit,
    mu: f64,
    pool: usize,
    out: &Path,
) -> Result<()> {
    let index = Index::load(index_dir)?;
    let parsed = load_queries(queries)?;
    let params = SmoothingParams::new(mu);

    let mut run = Run::new();
    for query in &parsed {
        let ranking = rank_threads(&index, params, &query.text, pool, method, k)?;
        run.insert(query.query_id.clone(), ranking);
    }

    let tag = run_tag(method, k);
    let head = header(
        "search",
        &[
            ("index", index_dir.display().to_string()),
            ("queries", queries.display().to_string()),
            ("method", method.name().to_string()),
            ("k", k.label()),
            ("mu", mu.to_string()),
            ("pool", pool.to_string()),
        ],
    );
    write_atomic(out, &format_run(&run, &tag, &head))?;
    println!("wrote run for {} queries to {}", run.len(), out.display());
    Ok(())
}

/// Run tag: method name plus the k cap, e.g. `combsum_k3` or
/// `combsum_basic`.
fn run_tag(method: AggregationMethod, k: KLimit) -> String {
    match k {
        KLimit::All => format!("{}_basic", method.name()),
        KLimit::Top(k) => format!("{}_k{k}", method.name()),
    }
}

fn cmd_vd_search(index_dir: &Path, queries: &Path, mu: f64, out: &Path) -> Result<()> {
    let index = Index::load(index_dir)?;
    let parsed = load_queries(queries)?;
    let params = SmoothingParams::new(mu);

    let mut run = Run::new();
    for query in &parsed {
        let pool = rank_virtual_docs(&index, params, &query.text, index.num_docs().max(1))?;
        let ranking: Vec<(String, f64)> = pool
            .into_iter()
            .map(|doc| (doc.thread_id, doc.log_score))
            .collect();
        run.insert(query.query_id.clone(), ranking);
    }

    let head = header(
        "vd-search",
        &[
            ("index", index_dir.display().to_string()),
            ("queries", queries.display().to_string()),
            ("mu", mu.to_string()),
        ],
    );
    write_atomic(out, &format_run(&run, "vd", &head))?;
    println!("wrote run for {} queries to {}", run.len(), out.display());
    Ok(())
}

fn cmd_eval(run_path: &Path, qrels_path: &Path, cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter(
            "cutoff must be at least 1".to_string(),
        ));
    }
    let run = load_run(run_path)?;
    let qrels = load_qrels(qrels_path)?;
    let report = evaluate_run_at(&run, &qrels, cutoff);

    let head = header(
        "eval",
        &[
            ("run", run_path.display().to_string()),
            ("qrels", qrels_path.display().to_string()),
            ("cutoff", cutoff.to_string()),
        ],
    );
    print!("{}", with_header(&head, &report.to_tsv()));
    Ok(())
}

fn cmd_ttest(
    run_a_path: &Path,
    run_b_path: &Path,
    qrels_path: &Path,
    metric: MetricName,
) -> Result<()> {
    let run_a = load_run(run_a_path)?;
    let run_b = load_run(run_b_path)?;
    let qrels = load_qrels(qrels_path)?;

    let report_a = evaluate_run_at(&run_a, &qrels, 10);
    let report_b = evaluate_run_at(&run_b, &qrels, 10);

    // Pair over the union of query ids; a query one run skipped scores
    // zero there, so coverage differences count against the shorter run.
    let mut ids: Vec<&String> = report_a
        .per_query
        .keys()
        .chain(report_b.per_query.keys())
        .collect();
    ids.sort();
    ids.dedup();
    let pick = |report: &threadfuse_core::MetricReport, id: &String| {
        report.per_query.get(id).map_or(0.0, |m| metric.pick(m))
    };
    let a: Vec<f64> = ids.iter().map(|id| pick(&report_a, id)).collect();
    let b: Vec<f64> = ids.iter().map(|id| pick(&report_b, id)).collect();
    let result = paired_t_test(&a, &b)?;

    let head = header(
        "ttest",
        &[
            ("run_a", run_a_path.display().to_string()),
            ("run_b", run_b_path.display().to_string()),
            ("qrels", qrels_path.display().to_string()),
            ("metric", metric.label().to_string()),
        ],
    );
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let body = format!(
        "queries\t{}\nmean_a\t{:.6}\nmean_b\t{:.6}\nmean_diff\t{:.6}\nt\t{:.6}\ndf\t{}\np\t{:.6e}\nsignificant\t{}\ndegenerate_variance\t{}\n",
        ids.len(),
        mean(&a),
        mean(&b),
        result.mean_diff,
        result.t,
        result.df,
        result.p,
        result.significant,
        result.degenerate_variance
    );
    print!("{}", with_header(&head, &body));
    Ok(())
}

fn grid_flag_params(
    index: &Path,
    queries: &Path,
    qrels: &Path,
    method: AggregationMethod,
    spec: &GridSpec,
    report: ReportMode,
) -> Vec<(&'static str, String)> {
    let join_f = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    let join_u = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut params = vec![
        ("index", index.display().to_string()),
        ("queries", queries.display().to_string()),
        ("qrels", qrels.display().to_string()),
        ("method", method.name().to_string()),
        ("mus", join_f(&spec.mus)),
        ("pools", join_u(&spec.pools)),
        ("ks", join_u(&spec.ks)),
        ("folds", spec.folds.to_string()),
        (
            "report",
            match report {
                ReportMode::Cv => "cv".to_string(),
                ReportMode::Full => "full".to_string(),
            },
        ),
    ];
    if let Some(seed) = spec.shuffle_seed {
        params.push(("shuffle_seed", seed.to_string()));
    }
    params
}

fn cmd_gridsearch(
    index_dir: &Path,
    queries_path: &Path,
    qrels_path: &Path,
    method: AggregationMethod,
    spec: &GridSpec,
    report: ReportMode,
) -> Result<()> {
    let index = Index::load(index_dir)?;
    let queries = load_queries(queries_path)?;
    let qrels = load_qrels(qrels_path)?;

    let head = header(
        "gridsearch",
        &grid_flag_params(index_dir, queries_path, qrels_path, method, spec, report),
    );
    let mut body = String::new();
    match report {
        ReportMode::Cv => {
            let result = kfold_grid_search(&index, &queries, &qrels, method, spec)?;
            body.push_str("fold\tmu\tpool\tk\ttrain_map\tmap\tp10\tndcg10\n");
            for fold in &result.folds {
                body.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                    fold.fold,
                    fold.best.mu,
                    fold.best.pool,
                    fold.best.k,
                    fold.train_map,
                    fold.test.map,
                    fold.test.p10,
                    fold.test.ndcg10
                ));
            }
            body.push_str(&format!(
                "all\t-\t-\t-\t-\t{:.6}\t{:.6}\t{:.6}\n",
                result.cv.map, result.cv.p10, result.cv.ndcg10
            ));
        }
        ReportMode::Full => {
            let surface = full_grid_search(&index, &queries, &qrels, method, spec)?;
            body.push_str("mu\tpool\tk\tmap\tp10\tndcg10\n");
            for (point, metrics) in surface {
                body.push_str(&format!(
                    "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                    point.mu, point.pool, point.k, metrics.map, metrics.p10, metrics.ndcg10
                ));
            }
        }
    }
    print!("{}", with_header(&head, &body));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    index_dir: &Path,
    queries_path: &Path,
    qrels_path: &Path,
    method: AggregationMethod,
    mu: f64,
    pool: usize,
    k_min: usize,
    k_max: usize,
    out: &Path,
) -> Result<()> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k-min <= k-max, got {k_min}..{k_max}"
        )));
    }
    let index = Index::load(index_dir)?;
    let queries = load_queries(queries_path)?;
    let qrels = load_qrels(qrels_path)?;

    let ks: Vec<usize> = (k_min..=k_max).collect();
    let rows = sweep_k(&index, &queries, &qrels, method, mu, pool, &ks)?;

    let head = header(
        "sweep",
        &[
            ("index", index_dir.display().to_string()),
            ("queries", queries_path.display().to_string()),
            ("qrels", qrels_path.display().to_string()),
            ("method", method.name().to_string()),
            ("mu", mu.to_string()),
            ("pool", pool.to_string()),
            ("k_min", k_min.to_string()),
            ("k_max", k_max.to_string()),
        ],
    );
    let mut body = String::from("k,map,p10,ndcg10\n");
    for (limit, metrics) in rows {
        body.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            limit.label(),
            metrics.map,
            metrics.p10,
            metrics.ndcg10
        ));
    }
    write_atomic(out, &with_header(&head, &body))?;
    println!("wrote sweep over k={k_min}..{k_max} to {}", out.display());
    Ok(())
}

fn cmd_synth(
    seed: u64,
    threads: usize,
    queries: usize,
    concentration: f64,
    out: &Path,
) -> Result<()> {
    let spec = SynthSpec {
        seed,
        threads,
        queries,
        concentration,
        ..SynthSpec::default()
    };
    let corpus = spec.generate()?;

    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("corpus.jsonl"), &corpus.corpus_jsonl)?;
    write_atomic(&out.join("queries.tsv"), &corpus.queries_tsv)?;
    write_atomic(&out.join("qrels.txt"), &corpus.qrels)?;

    let head = header(
        "synth",
        &[
            ("seed", seed.to_string()),
            ("threads", threads.to_string()),
            ("queries", queries.to_string()),
            ("concentration", concentration.to_string()),
        ],
    );
    let manifest = "files=corpus.jsonl,queries.tsv,qrels.txt\n".to_string();
    write_atomic(&out.join("manifest.txt"), &with_header(&head, &manifest))?;
    println!(
        "generated {threads} threads and {queries} queries into {}",
        out.display()
    );
    Ok(())
}
