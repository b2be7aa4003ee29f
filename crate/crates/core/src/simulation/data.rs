// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, Truth};
use crate::null_dist::std_normal_cdf;
use crate::pvalues::PValues;

/// How nonnull nodes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMode {
    /// Independent flips in reverse topological order, then upward closure.
    Global,
    /// Flips at the leaves only; an internal node is nonnull iff a child is.
    Incremental,
    /// Every node of depth at most `k` is nonnull.
    DepthLayers(usize),
}

/// Distribution of nonnull p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Effect {
    /// `z ~ N(mean + slope (D - d), 1)`, `p = 1 - Phi(z)`.
    Normal { mean: f64, slope: f64 },
    /// `p ~ Beta(a exp(-slope (D - d)), b)`.
    Beta { a: f64, b: f64, slope: f64 },
}

/// A rule for ground truth plus nonnull p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternativeScheme {
    pub name: SchemeName,
    pub truth: TruthMode,
    pub nonnull_prob: f64,
    pub effect: Effect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    GlobalNormal,
    IncrementalNormal,
    GlobalBeta,
    IncrementalBeta,
    Layers(usize),
}

impl AlternativeScheme {
    /// Nonnull `z ~ N(2, 1)`, flip probability 0.5.
    pub fn global_normal() -> Self {
        Self {
            name: SchemeName::GlobalNormal,
            truth: TruthMode::Global,
            nonnull_prob: 0.5,
            effect: Effect::Normal { mean: 2.0, slope: 0.0 },
        }
    }

    /// Nonnull `z ~ N(1 + 0.3 (D - d), 1)`, leaf probability 0.5.
    pub fn incremental_normal() -> Self {
        Self {
            name: SchemeName::IncrementalNormal,
            truth: TruthMode::Incremental,
            nonnull_prob: 0.5,
            effect: Effect::Normal { mean: 1.0, slope: 0.3 },
        }
    }

    /// Nonnull `p ~ Beta(exp(-4), 0.5)`, flip probability 0.2.
    pub fn global_beta() -> Self {
        Self {
            name: SchemeName::GlobalBeta,
            truth: TruthMode::Global,
            nonnull_prob: 0.2,
            effect: Effect::Beta { a: (-4.0f64).exp(), b: 0.5, slope: 0.0 },
        }
    }

    /// Nonnull `p ~ Beta(exp(-4 - 0.3 (D - d)), 0.5)`, leaf probability 0.2.
    pub fn incremental_beta() -> Self {
        Self {
            name: SchemeName::IncrementalBeta,
            truth: TruthMode::Incremental,
            nonnull_prob: 0.2,
            effect: Effect::Beta { a: (-4.0f64).exp(), b: 0.5, slope: 0.3 },
        }
    }

    /// The first `k` depth levels are nonnull with `p ~ Beta(0.1, 0.5)`.
    pub fn depth_layers(k: usize) -> Self {
        Self {
            name: SchemeName::Layers(k),
            truth: TruthMode::DepthLayers(k),
            nonnull_prob: 0.0,
            effect: Effect::Beta { a: 0.1, b: 0.5, slope: 0.0 },
        }
    }

    pub fn with_nonnull_prob(mut self, prob: f64) -> Self {
        self.nonnull_prob = prob;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.nonnull_prob) {
            return Err(Error::Config(format!("nonnull probability {} outside [0, 1]", self.nonnull_prob)));
        }
        match self.effect {
            Effect::Normal { mean, slope } if !(mean.is_finite() && slope.is_finite()) => {
                Err(Error::Config("normal effect needs finite parameters".into()))
            }
            Effect::Beta { a, b, slope } if !(a > 0.0 && b > 0.0 && slope.is_finite()) => {
                Err(Error::Config("beta effect needs positive shapes".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AlternativeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name {
            SchemeName::GlobalNormal => f.write_str("global_normal"),
            SchemeName::IncrementalNormal => f.write_str("incremental_normal"),
            SchemeName::GlobalBeta => f.write_str("global_beta"),
            SchemeName::IncrementalBeta => f.write_str("incremental_beta"),
            SchemeName::Layers(k) => write!(f, "layers:{k}"),
        }
    }
}

impl FromStr for AlternativeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global_normal" => Ok(Self::global_normal()),
            "incremental_normal" => Ok(Self::incremental_normal()),
            "global_beta" => Ok(Self::global_beta()),
            "incremental_beta" => Ok(Self::incremental_beta()),
            _ => match s.strip_prefix("layers:").map(str::parse::<usize>) {
                Some(Ok(k)) => Ok(Self::depth_layers(k)),
                _ => Err(Error::Config(format!(
                    "unknown scheme `{s}` (expected global_normal, incremental_normal, global_beta, incremental_beta or layers:<k>)"
                ))),
            },
        }
    }
}

/// Joint law of the null p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    #[default]
    Independent,
    /// Gaussian process along the graph: a null node's latent value is the
    /// mean of its null parents' values plus standard normal noise.
    GaussianCopula,
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Independent => "independent",
            Self::GaussianCopula => "copula",
        })
    }
}

impl FromStr for NullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Self::Independent),
            "copula" => Ok(Self::GaussianCopula),
            _ => Err(Error::Config(format!("unknown null model `{s}` (expected independent or copula)"))),
        }
    }
}

/// Draws a ground truth for `dag` under `scheme`.
pub fn gen_truth<R: Rng + ?Sized>(dag: &Dag, scheme: &AlternativeScheme, rng: &mut R) -> Truth {
    let n = dag.node_count();
    let prob = scheme.nonnull_prob;
    let mut flags = vec![false; n];
    match scheme.truth {
        TruthMode::Global => {
            for &v in dag.topological_order().iter().rev() {
                flags[v] = rng.random_bool(prob);
            }
            Truth::closed_upward(dag, flags)
        }
        TruthMode::Incremental => {
            for &v in dag.topological_order().iter().rev() {
                flags[v] = if dag.is_leaf(v) {
                    rng.random_bool(prob)
                } else {
                    dag.children(v).iter().any(|&c| flags[c])
                };
            }
            Truth::closed_upward(dag, flags)
        }
        TruthMode::DepthLayers(k) => {
            for (v, f) in flags.iter_mut().enumerate() {
                *f = dag.depth(v) <= k;
            }
            Truth::closed_upward(dag, flags)
        }
    }
}

/// Upper-tail p-value of a z-score: `1 - Phi(z)`.
#[inline]
pub fn one_sided_pvalue(z: f64) -> f64 {
    std_normal_cdf(-z)
}

fn nonnull_pvalue<R: Rng + ?Sized>(effect: &Effect, levels_below_max: usize, rng: &mut R) -> f64 {
    let gap = levels_below_max as f64;
    match *effect {
        Effect::Normal { mean, slope } => {
            let z: f64 = rng.sample(StandardNormal);
            one_sided_pvalue(z + mean + slope * gap)
        }
        Effect::Beta { a, b, slope } => {
            let shape = a * (-slope * gap).exp();
            Beta::new(shape, b).expect("validated shapes").sample(rng)
        }
    }
}

fn null_pvalue<R: Rng + ?Sized>(effect: &Effect, rng: &mut R) -> f64 {
    match effect {
        Effect::Normal { .. } => one_sided_pvalue(rng.sample(StandardNormal)),
        Effect::Beta { .. } => rng.random::<f64>(),
    }
}

/// Independent p-values: uniform nulls, scheme-driven nonnulls.
pub fn gen_pvalues_independent<R: Rng + ?Sized>(
    dag: &Dag,
    truth: &Truth,
    scheme: &AlternativeScheme,
    rng: &mut R,
) -> PValues {
    let max_depth = dag.max_depth();
    let p = (0..dag.node_count())
        .map(|v| {
            if truth.is_nonnull(v) {
                nonnull_pvalue(&scheme.effect, max_depth - dag.depth(v), rng)
            } else {
                null_pvalue(&scheme.effect, rng)
            }
        })
        .collect();
    PValues::from_unchecked(p)
}

/// Exact marginal variances of the latent null values under
/// [`NullModel::GaussianCopula`]; `None` for nonnull nodes.
pub fn copula_null_variances(dag: &Dag, truth: &Truth) -> Vec<Option<f64>> {
    let n = dag.node_count();
    let nulls: Vec<usize> = dag.topological_order().iter().copied().filter(|&v| !truth.is_nonnull(v)).collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &v) in nulls.iter().enumerate() {
        slot[v] = i;
    }
    // Lower-triangular covariance in topological order of the nulls.
    let k = nulls.len();
    let mut cov = vec![0.0; k * k];
    let mut var = vec![None; n];
    for (i, &v) in nulls.iter().enumerate() {
        let np: Vec<usize> = dag.parents(v).iter().map(|&q| slot[q]).filter(|&s| s != usize::MAX).collect();
        if np.is_empty() {
            cov[i * k + i] = 1.0;
        } else {
            let w = 1.0 / np.len() as f64;
            for j in 0..i {
                let c: f64 = np.iter().map(|&a| cov_at(&cov, k, a, j)).sum::<f64>() * w;
                cov[i * k + j] = c;
            }
            let s: f64 = np.iter().flat_map(|&a| np.iter().map(move |&b| (a, b))).map(|(a, b)| cov_at(&cov, k, a, b)).sum();
            cov[i * k + i] = 1.0 + s * w * w;
        }
        var[v] = Some(cov[i * k + i]);
    }
    var
}

#[inline]
fn cov_at(cov: &[f64], k: usize, a: usize, b: usize) -> f64 {
    if a >= b {
        cov[a * k + b]
    } else {
        cov[b * k + a]
    }
}

/// Gaussian-process null p-values: each null latent value is the mean of
/// its null parents' latent values plus `N(0, 1)` noise, and
/// `p = Phi(Z / sd)` with the exact marginal standard deviation. Nodes
/// without null parents draw a fresh `N(0, 1)`.
pub fn gen_pvalues_copula<R: Rng + ?Sized>(
    dag: &Dag,
    truth: &Truth,
    scheme: &AlternativeScheme,
    rng: &mut R,
) -> PValues {
    gen_pvalues_copula_with(dag, truth, scheme, &copula_null_variances(dag, truth), rng)
}

pub(crate) fn gen_pvalues_copula_with<R: Rng + ?Sized>(
    dag: &Dag,
    truth: &Truth,
    scheme: &AlternativeScheme,
    variances: &[Option<f64>],
    rng: &mut R,
) -> PValues {
    let n = dag.node_count();
    let max_depth = dag.max_depth();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    for &v in dag.topological_order() {
        if truth.is_nonnull(v) {
            p[v] = nonnull_pvalue(&scheme.effect, max_depth - dag.depth(v), rng);
            continue;
        }
        let (sum, count) = dag
            .parents(v)
            .iter()
            .filter(|&&q| !truth.is_nonnull(q))
            .fold((0.0, 0usize), |(s, c), &q| (s + z[q], c + 1));
        let eps: f64 = rng.sample(StandardNormal);
        z[v] = if count == 0 { eps } else { sum / count as f64 + eps };
        let sd = variances[v].expect("null node has a variance").sqrt();
        p[v] = std_normal_cdf(z[v] / sd);
    }
    PValues::from_unchecked(p)
}

/// Dispatches on `model`.
pub fn gen_pvalues<R: Rng + ?Sized>(
    dag: &Dag,
    truth: &Truth,
    scheme: &AlternativeScheme,
    model: NullModel,
    rng: &mut R,
) -> PValues {
    match model {
        NullModel::Independent => gen_pvalues_independent(dag, truth, scheme, rng),
        NullModel::GaussianCopula => gen_pvalues_copula(dag, truth, scheme, rng),
    }
}
