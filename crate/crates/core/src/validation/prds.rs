// SPDX-License-Identifier: Apache-2.0
//! Screen for positive regression dependence: conditional on the decile of
//! one null coordinate, the probability of landing in an increasing set
//! should not decrease. A significant decreasing trend for any sampled set is
//! reported as a violation. This is a necessary-condition check only.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::superuniform::NullSampler;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::rng::{derive_seed, stream};
use crate::simulation::NullModel;
use crate::smoothing::{Smoother, SmoothingSpec};

pub const MIN_PRDS_TRIALS: usize = 200_000;
const BINS: usize = 10;
/// One-sided 0.1% normal critical value.
const Z_CRIT: f64 = 3.090232306167813;
const CHUNK: usize = 4096;

/// `{x : x_j >= t_j for every (j, t_j)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperSet {
    pub thresholds: Vec<(usize, f64)>,
}

impl UpperSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.thresholds.iter().all(|&(j, t)| x[j] >= t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub set: UpperSet,
    /// Share of draws inside the set, per decile of the conditioning node.
    pub bin_rates: Vec<f64>,
    /// Trend statistic; strongly negative means decreasing.
    pub trend_z: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrdsReport {
    pub smoothing: String,
    pub null_node: usize,
    pub trials: usize,
    pub probes: Vec<ProbeResult>,
    pub violations: usize,
}

/// Draws `probes` random upper sets over up to three coordinates other than
/// `null_node`, with thresholds uniform on `[0.05, 0.95]`.
pub fn random_upper_sets(node_count: usize, null_node: usize, probes: usize, seed: u64) -> Vec<UpperSet> {
    let others: Vec<usize> = (0..node_count).filter(|&v| v != null_node).collect();
    if others.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..probes)
        .map(|_| {
            let k = rng.random_range(1..=others.len().min(3));
            let mut coords: Vec<usize> = sample(&mut rng, others.len(), k).into_iter().map(|i| others[i]).collect();
            coords.sort_unstable();
            UpperSet { thresholds: coords.into_iter().map(|j| (j, rng.random_range(0.05..0.95))).collect() }
        })
        .collect()
}

/// Smooths `trials` all-null draws and screens `null_node` against
/// `probes` random upper sets.
pub fn prds_diagnostic(
    dag: &Dag,
    spec: &SmoothingSpec,
    null_model: NullModel,
    trials: usize,
    seed: u64,
    null_node: usize,
    probes: usize,
) -> Result<PrdsReport> {
    dag.check_index(null_node)?;
    let smoother = Smoother::new(dag, spec.clone())?;
    let sampler = NullSampler::new(dag, null_model);
    let mut report = prds_screen(dag.node_count(), null_node, trials, seed, probes, |rng| {
        smoother.apply(&sampler.draw(rng)).map(|p| p.into_inner())
    })?;
    report.smoothing = spec.to_string();
    Ok(report)
}

/// Same screen over an arbitrary sampler of `node_count`-vectors.
pub fn prds_screen<F>(
    node_count: usize,
    null_node: usize,
    trials: usize,
    seed: u64,
    probes: usize,
    draw: F,
) -> Result<PrdsReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    if trials < MIN_PRDS_TRIALS {
        return Err(Error::Config(format!("PRDS screen needs at least {MIN_PRDS_TRIALS} trials, got {trials}")));
    }
    if null_node >= node_count {
        return Err(Error::IndexOutOfRange { index: null_node, node_count });
    }
    let sets = random_upper_sets(node_count, null_node, probes, derive_seed(seed, &[u64::MAX]));
    let chunks = trials.div_ceil(CHUNK);
    // Per draw: conditioning value and one membership bit per probe.
    let draws: Vec<(f64, Vec<bool>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<(f64, Vec<bool>)>> {
            let mut rng = stream(seed, &[chunk as u64]);
            let len = CHUNK.min(trials - chunk * CHUNK);
            (0..len)
                .map(|_| {
                    let x = draw(&mut rng)?;
                    Ok((x[null_node], sets.iter().map(|s| s.contains(&x)).collect()))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by(|&a, &b| draws[a].0.total_cmp(&draws[b].0).then(a.cmp(&b)));
    let n = draws.len();
    let bin_of = |rank: usize| rank * BINS / n;

    let probes: Vec<ProbeResult> = sets
        .into_iter()
        .enumerate()
        .map(|(k, set)| {
            let mut hits = [0u64; BINS];
            let mut sizes = [0u64; BINS];
            for (rank, &i) in order.iter().enumerate() {
                let b = bin_of(rank);
                sizes[b] += 1;
                hits[b] += draws[i].1[k] as u64;
            }
            let trend_z = trend_statistic(&hits, &sizes);
            ProbeResult {
                set,
                bin_rates: hits.iter().zip(&sizes).map(|(&h, &s)| h as f64 / s.max(1) as f64).collect(),
                trend_z,
                violation: trend_z < -Z_CRIT,
            }
        })
        .collect();
    let violations = probes.iter().filter(|p| p.violation).count();
    Ok(PrdsReport { smoothing: String::new(), null_node, trials, probes, violations })
}

/// Cochran–Armitage trend statistic with scores `0..bins`.
fn trend_statistic(hits: &[u64], sizes: &[u64]) -> f64 {
    let total: f64 = sizes.iter().sum::<u64>() as f64;
    let p = hits.iter().sum::<u64>() as f64 / total;
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let mut t = 0.0;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (k, (&h, &s)) in hits.iter().zip(sizes).enumerate() {
        let k = k as f64;
        t += k * (h as f64 - s as f64 * p);
        s1 += s as f64 * k;
        s2 += s as f64 * k * k;
    }
    let var = p * (1.0 - p) * (s2 - s1 * s1 / total);
    if var <= 0.0 {
        0.0
    } else {
        t / var.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_uniforms_show_no_violations() {
        let g = Dag::new(4, &[]).unwrap();
        let r = prds_diagnostic(&g, &SmoothingSpec::None, NullModel::Independent, 200_000, 1, 0, 20).unwrap();
        assert_eq!(r.probes.len(), 20);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn fisher_chain_shows_no_violations() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        for node in 0..3 {
            let r = prds_diagnostic(&g, &SmoothingSpec::fisher(), NullModel::Independent, 200_000, 2, node, 20)
                .unwrap();
            assert_eq!(r.violations, 0, "node {node}: {:?}", r.probes.iter().map(|p| p.trend_z).collect::<Vec<_>>());
        }
    }

    #[test]
    fn anti_monotone_fixture_is_detected() {
        let r = prds_screen(2, 0, 200_000, 3, 5, |rng| {
            let u: f64 = rng.random();
            Ok(vec![u, 1.0 - u])
        })
        .unwrap();
        assert_eq!(r.violations, 5);
        assert!(r.probes.iter().all(|p| p.trend_z < -10.0));
    }

    #[test]
    fn trend_statistic_sign() {
        assert!(trend_statistic(&[10, 20, 30], &[100, 100, 100]) > 0.0);
        assert!(trend_statistic(&[30, 20, 10], &[100, 100, 100]) < 0.0);
        assert_eq!(trend_statistic(&[0, 0], &[5, 5]), 0.0);
    }

    #[test]
    fn guards() {
        let g = Dag::new(2, &[]).unwrap();
        assert!(prds_diagnostic(&g, &SmoothingSpec::None, NullModel::Independent, 1000, 0, 0, 1).is_err());
        assert!(prds_diagnostic(&g, &SmoothingSpec::None, NullModel::Independent, 200_000, 0, 7, 1).is_err());
    }
}
