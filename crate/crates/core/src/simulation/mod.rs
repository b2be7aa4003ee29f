// SPDX-License-Identifier: Apache-2.0
//! Synthetic graphs, ground truths and p-values, and the benchmark grid.

mod benchmark;
mod data;
mod graphs;
mod metrics;

pub use benchmark::{
    run_benchmark, run_benchmark_detailed, BenchmarkConfig, BenchmarkSummary, CellKey, CellTrials, Selector,
    DEFAULT_GAMMA, STANDARD_ALPHAS,
};
pub(crate) use data::gen_pvalues_copula_with;
pub use data::{
    copula_null_variances, gen_pvalues, gen_pvalues_copula, gen_pvalues_independent, gen_truth, one_sided_pvalue,
    AlternativeScheme, Effect, NullModel, SchemeName, TruthMode,
};
pub use graphs::{gen_graph, trigenic_graph, GraphRecipe};
pub use metrics::{compute_metrics, TrialMetrics};
