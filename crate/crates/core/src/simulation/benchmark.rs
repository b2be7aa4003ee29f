// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{copula_null_variances, gen_pvalues_copula_with, gen_pvalues_independent, gen_truth};
use super::{gen_graph, AlternativeScheme, GraphRecipe, NullModel, TrialMetrics};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::rng::{derive_seed, stream};
use crate::selection::Method;
use crate::simulation::compute_metrics;
use crate::smoothing::{Smoother, SmoothingSpec};

/// Alpha grid of the power sweeps.
pub const STANDARD_ALPHAS: [f64; 10] = [0.01, 0.02, 0.03, 0.04, 0.05, 0.08, 0.1, 0.15, 0.2, 0.25];
pub const DEFAULT_GAMMA: f64 = 0.1;

const GRAPH_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;

/// A selection method together with its exceedance tolerance. `gamma` is
/// passed to the FDX procedure and used for every method's FDX metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub method: Method,
    pub gamma: f64,
}

impl Selector {
    pub fn new(method: Method) -> Self {
        Self { method, gamma: DEFAULT_GAMMA }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub recipes: Vec<GraphRecipe>,
    pub schemes: Vec<AlternativeScheme>,
    pub null_model: NullModel,
    pub smoothings: Vec<SmoothingSpec>,
    pub selectors: Vec<Selector>,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Draw a fresh graph each trial instead of one graph per recipe.
    pub resample_graph: bool,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::Config(format!("benchmark needs at least one {what}")));
        if self.recipes.is_empty() {
            return empty("recipe");
        }
        if self.schemes.is_empty() {
            return empty("scheme");
        }
        if self.smoothings.is_empty() {
            return empty("smoothing");
        }
        if self.selectors.is_empty() {
            return empty("selector");
        }
        if self.alphas.is_empty() {
            return empty("alpha");
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("alpha {a} outside (0, 1]")));
            }
        }
        for s in &self.selectors {
            if !(0.0..1.0).contains(&s.gamma) {
                return Err(Error::Config(format!("gamma {} outside [0, 1)", s.gamma)));
            }
        }
        for r in &self.recipes {
            r.validate()?;
        }
        for s in &self.schemes {
            s.validate()?;
        }
        for s in &self.smoothings {
            s.validate()?;
        }
        Ok(())
    }
}

/// Identifies one cell of the benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub recipe: String,
    pub scheme: String,
    pub smoothing: String,
    pub method: Method,
    pub gamma: f64,
    pub alpha: f64,
}

/// Per-trial metrics of one cell, in trial order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTrials {
    pub key: CellKey,
    pub trials: Vec<TrialMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub key: CellKey,
    pub trials: usize,
    pub power: f64,
    pub err_fwer: f64,
    pub err_fdx: f64,
    pub err_fdr: f64,
    pub se_power: f64,
    pub se_fwer: f64,
    pub se_fdx: f64,
    pub se_fdr: f64,
}

impl CellTrials {
    pub fn summarize(&self) -> BenchmarkSummary {
        let t = self.trials.len() as f64;
        let power: Vec<f64> = self.trials.iter().map(|m| m.power).collect();
        let fdp: Vec<f64> = self.trials.iter().map(|m| m.fdp).collect();
        let fwer = self.trials.iter().filter(|m| m.any_false).count() as f64 / t;
        let fdx = self.trials.iter().filter(|m| m.fdp_exceeds_gamma).count() as f64 / t;
        BenchmarkSummary {
            key: self.key.clone(),
            trials: self.trials.len(),
            power: mean(&power),
            err_fwer: fwer,
            err_fdx: fdx,
            err_fdr: mean(&fdp),
            se_power: std_error(&power),
            se_fwer: (fwer * (1.0 - fwer) / t).sqrt(),
            se_fdx: (fdx * (1.0 - fdx) / t).sqrt(),
            se_fdr: std_error(&fdp),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; 0 for fewer than two values.
fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Runs the grid and returns one summary per cell.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<BenchmarkSummary>> {
    Ok(run_benchmark_detailed(config)?.iter().map(CellTrials::summarize).collect())
}

/// Runs the grid and keeps every trial's metrics.
///
/// Cells are ordered recipe, scheme, smoothing, selector, alpha. Trial `t`
/// draws its data from `(seed, recipe, scheme, t)` so any trial can be
/// replayed alone and results do not depend on thread scheduling.
pub fn run_benchmark_detailed(config: &BenchmarkConfig) -> Result<Vec<CellTrials>> {
    config.validate()?;
    let mut cells = Vec::new();
    for (ri, recipe) in config.recipes.iter().enumerate() {
        let fixed = if config.resample_graph {
            None
        } else {
            Some(gen_graph(recipe, derive_seed(config.seed, &[GRAPH_STREAM, ri as u64]))?)
        };
        let fixed_smoothers = match &fixed {
            Some(g) => Some(build_smoothers(g, &config.smoothings)?),
            None => None,
        };
        for (si, scheme) in config.schemes.iter().enumerate() {
            let per_trial: Vec<Vec<TrialMetrics>> = (0..config.trials)
                .into_par_iter()
                .map(|t| match (&fixed, &fixed_smoothers) {
                    (Some(g), Some(s)) => run_trial(config, g, s, scheme, ri, si, t),
                    _ => {
                        let seed = derive_seed(config.seed, &[GRAPH_STREAM, ri as u64, t as u64]);
                        let g = gen_graph(recipe, seed)?;
                        let s = build_smoothers(&g, &config.smoothings)?;
                        run_trial(config, &g, &s, scheme, ri, si, t)
                    }
                })
                .collect::<Result<_>>()?;
            let stride = config.alphas.len() * config.selectors.len();
            for (mi, smoothing) in config.smoothings.iter().enumerate() {
                for (ki, sel) in config.selectors.iter().enumerate() {
                    for (ai, &alpha) in config.alphas.iter().enumerate() {
                        let idx = mi * stride + ki * config.alphas.len() + ai;
                        cells.push(CellTrials {
                            key: CellKey {
                                recipe: recipe.to_string(),
                                scheme: scheme.to_string(),
                                smoothing: smoothing.to_string(),
                                method: sel.method,
                                gamma: sel.gamma,
                                alpha,
                            },
                            trials: per_trial.iter().map(|m| m[idx]).collect(),
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn build_smoothers<'a>(dag: &'a Dag, specs: &[SmoothingSpec]) -> Result<Vec<Smoother<'a>>> {
    specs.iter().map(|s| Smoother::new(dag, s.clone())).collect()
}

fn run_trial(
    config: &BenchmarkConfig,
    dag: &Dag,
    smoothers: &[Smoother<'_>],
    scheme: &AlternativeScheme,
    ri: usize,
    si: usize,
    t: usize,
) -> Result<Vec<TrialMetrics>> {
    let mut rng = stream(config.seed, &[DATA_STREAM, ri as u64, si as u64, t as u64]);
    let truth = gen_truth(dag, scheme, &mut rng);
    let raw = match config.null_model {
        NullModel::Independent => gen_pvalues_independent(dag, &truth, scheme, &mut rng),
        NullModel::GaussianCopula => {
            let var = copula_null_variances(dag, &truth);
            gen_pvalues_copula_with(dag, &truth, scheme, &var, &mut rng)
        }
    };
    let mut out = Vec::with_capacity(smoothers.len() * config.selectors.len() * config.alphas.len());
    for smoother in smoothers {
        let p = smoother.apply(&raw)?;
        for sel in &config.selectors {
            for &alpha in &config.alphas {
                let result = sel.method.select(dag, &p, alpha, sel.gamma)?;
                out.push(compute_metrics(&result, &truth, sel.gamma)?);
            }
        }
    }
    Ok(out)
}
