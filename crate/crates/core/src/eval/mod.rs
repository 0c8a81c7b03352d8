//! Evaluation harness: retrieval metrics, TREC-style run files, paired
//! significance tests, grid search with k-fold cross-validation, and
//! per-k sweeps.

pub mod grid;
pub mod metrics;
pub mod run;
pub mod ttest;

pub use grid::{
    full_grid_search, kfold_grid_search, sweep_k, FoldResult, GridSearchResult, GridSpec,
    ParamPoint,
};
pub use metrics::{
    average_precision, evaluate_run, evaluate_run_at, ndcg_at, precision_at, MetricReport, Metrics,
};
pub use run::{format_run, parse_run, Run};
pub use ttest::{paired_t_test, TTestResult};
