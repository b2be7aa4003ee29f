// SPDX-License-Identifier: Apache-2.0
//! Shared inputs for the criterion benchmarks.

use dagsmooth::rng::stream;
use dagsmooth::simulation::{gen_graph, gen_pvalues_independent, gen_truth, AlternativeScheme, GraphRecipe};
use dagsmooth::{Dag, PValues};

/// A graph from `recipe` with one draw of global-alternative p-values.
pub fn fixture(recipe: &GraphRecipe, seed: u64) -> (Dag, PValues) {
    let dag = gen_graph(recipe, seed).expect("benchmark recipes are valid");
    let mut rng = stream(seed, &[]);
    let scheme = AlternativeScheme::global_normal();
    let truth = gen_truth(&dag, &scheme, &mut rng);
    let p = gen_pvalues_independent(&dag, &truth, &scheme, &mut rng);
    (dag, p)
}

pub fn recipes() -> Vec<GraphRecipe> {
    vec![GraphRecipe::deep_tree(), GraphRecipe::bipartite(), GraphRecipe::hourglass(), GraphRecipe::layered_random()]
}
