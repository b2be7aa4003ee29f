// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, Truth};
use crate::pvalues::PValues;
use crate::rng::stream;
use crate::simulation::{copula_null_variances, AlternativeScheme, NullModel};
use crate::smoothing::{Smoother, SmoothingSpec};

pub const DEFAULT_GRID: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.25, 0.5];
pub const MIN_SUPERUNIFORM_TRIALS: usize = 50_000;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperUniformCell {
    pub node: usize,
    pub c: f64,
    pub frequency: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperUniformReport {
    pub smoothing: String,
    pub null_model: NullModel,
    pub trials: usize,
    pub cells: Vec<SuperUniformCell>,
    pub pass: bool,
}

impl SuperUniformReport {
    /// Cell with the largest `frequency - bound`.
    pub fn worst(&self) -> Option<&SuperUniformCell> {
        self.cells.iter().max_by(|a, b| (a.frequency - a.bound).total_cmp(&(b.frequency - b.bound)))
    }
}

/// Simulates `trials` all-null inputs, smooths them, and compares
/// `P(p_v <= c)` against `c + 3 sqrt(c (1 - c) / trials)` at every node and
/// grid point.
pub fn check_superuniformity(
    dag: &Dag,
    spec: &SmoothingSpec,
    null_model: NullModel,
    trials: usize,
    seed: u64,
    grid: &[f64],
) -> Result<SuperUniformReport> {
    if trials < MIN_SUPERUNIFORM_TRIALS {
        return Err(Error::Config(format!(
            "super-uniformity check needs at least {MIN_SUPERUNIFORM_TRIALS} trials, got {trials}"
        )));
    }
    if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
        return Err(Error::Config("grid points must lie in (0, 1)".into()));
    }
    let n = dag.node_count();
    let smoother = Smoother::new(dag, spec.clone())?;
    let sampler = NullSampler::new(dag, null_model);
    let chunks = trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<u64>> {
            let mut rng = stream(seed, &[chunk as u64]);
            let mut counts = vec![0u64; n * grid.len()];
            let len = CHUNK.min(trials - chunk * CHUNK);
            for _ in 0..len {
                let p = smoother.apply(&sampler.draw(&mut rng))?;
                for (v, &x) in p.as_slice().iter().enumerate() {
                    for (k, &c) in grid.iter().enumerate() {
                        if x <= c {
                            counts[v * grid.len() + k] += 1;
                        }
                    }
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; n * grid.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let t = trials as f64;
    let mut cells = Vec::with_capacity(n * grid.len());
    for v in 0..n {
        for (k, &c) in grid.iter().enumerate() {
            let frequency = counts[v * grid.len() + k] as f64 / t;
            let bound = c + 3.0 * (c * (1.0 - c) / t).sqrt();
            cells.push(SuperUniformCell { node: v, c, frequency, bound, pass: frequency <= bound });
        }
    }
    let pass = cells.iter().all(|c| c.pass);
    Ok(SuperUniformReport { smoothing: spec.to_string(), null_model, trials, cells, pass })
}

/// All-null raw p-value generator.
pub(crate) struct NullSampler<'a> {
    dag: &'a Dag,
    model: NullModel,
    truth: Truth,
    variances: Vec<Option<f64>>,
}

impl<'a> NullSampler<'a> {
    pub(crate) fn new(dag: &'a Dag, model: NullModel) -> Self {
        let truth = Truth::all_null(dag.node_count());
        let variances = match model {
            NullModel::Independent => Vec::new(),
            NullModel::GaussianCopula => copula_null_variances(dag, &truth),
        };
        Self { dag, model, truth, variances }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PValues {
        match self.model {
            NullModel::Independent => {
                PValues::from_unchecked((0..self.dag.node_count()).map(|_| rng.random::<f64>()).collect())
            }
            NullModel::GaussianCopula => crate::simulation::gen_pvalues_copula_with(
                self.dag,
                &self.truth,
                &AlternativeScheme::global_beta(),
                &self.variances,
                rng,
            ),
        }
    }
}
