// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;

/// Synthetic graph families used by the benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphRecipe {
    /// Complete `branching`-ary tree with `depth` levels.
    DeepTree { depth: usize, branching: usize },
    /// Same family as [`GraphRecipe::DeepTree`], shallow and broad by default.
    WideTree { depth: usize, branching: usize },
    /// Each root gets `fan_out` distinct leaves chosen uniformly.
    Bipartite { roots: usize, leaves: usize, fan_out: usize },
    /// Three layers with independent root-middle and middle-leaf edges,
    /// then repaired so every node is connected.
    Hourglass { roots: usize, middle: usize, leaves: usize, edge_prob: f64 },
    /// `layers` layers of `width` nodes; every node below the first picks
    /// `parents` distinct parents from the layer above.
    LayeredRandom { layers: usize, width: usize, parents: usize },
    /// Genes feed pairs, pairs feed triplets.
    Trigenic { genes: Vec<String>, pairs: Vec<[String; 2]>, triplets: Vec<[String; 3]> },
}

impl GraphRecipe {
    pub fn deep_tree() -> Self {
        Self::DeepTree { depth: 8, branching: 2 }
    }

    pub fn wide_tree() -> Self {
        Self::WideTree { depth: 3, branching: 20 }
    }

    pub fn bipartite() -> Self {
        Self::Bipartite { roots: 100, leaves: 100, fan_out: 20 }
    }

    pub fn hourglass() -> Self {
        Self::Hourglass { roots: 30, middle: 10, leaves: 30, edge_prob: 0.2 }
    }

    pub fn layered_random() -> Self {
        Self::LayeredRandom { layers: 5, width: 50, parents: 3 }
    }

    /// True for recipes whose output depends on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self, Self::Bipartite { .. } | Self::Hourglass { .. } | Self::LayeredRandom { .. })
    }
}

impl fmt::Display for GraphRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DeepTree { depth, branching } => write!(f, "deep_tree:{depth}:{branching}"),
            Self::WideTree { depth, branching } => write!(f, "wide_tree:{depth}:{branching}"),
            Self::Bipartite { roots, leaves, fan_out } => write!(f, "bipartite:{roots}:{leaves}:{fan_out}"),
            Self::Hourglass { roots, middle, leaves, edge_prob } => {
                write!(f, "hourglass:{roots}:{middle}:{leaves}:{edge_prob}")
            }
            Self::LayeredRandom { layers, width, parents } => write!(f, "layered_random:{layers}:{width}:{parents}"),
            Self::Trigenic { genes, pairs, triplets } => {
                write!(f, "trigenic:{}:{}:{}", genes.len(), pairs.len(), triplets.len())
            }
        }
    }
}

impl FromStr for GraphRecipe {
    type Err = Error;

    /// `name` alone uses the defaults; `name:a:b:...` sets every parameter.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = || Error::InvalidRecipe(format!("cannot parse recipe `{s}`"));
        let int = |a: &str| a.parse::<usize>().map_err(|_| bad());
        let recipe = match (name, args.len()) {
            ("deep_tree", 0) => Self::deep_tree(),
            ("deep_tree", 2) => Self::DeepTree { depth: int(args[0])?, branching: int(args[1])? },
            ("wide_tree", 0) => Self::wide_tree(),
            ("wide_tree", 2) => Self::WideTree { depth: int(args[0])?, branching: int(args[1])? },
            ("bipartite", 0) => Self::bipartite(),
            ("bipartite", 3) => {
                Self::Bipartite { roots: int(args[0])?, leaves: int(args[1])?, fan_out: int(args[2])? }
            }
            ("hourglass", 0) => Self::hourglass(),
            ("hourglass", 4) => Self::Hourglass {
                roots: int(args[0])?,
                middle: int(args[1])?,
                leaves: int(args[2])?,
                edge_prob: args[3].parse().map_err(|_| bad())?,
            },
            ("layered_random", 0) => Self::layered_random(),
            ("layered_random", 3) => {
                Self::LayeredRandom { layers: int(args[0])?, width: int(args[1])?, parents: int(args[2])? }
            }
            _ => return Err(bad()),
        };
        recipe.validate()?;
        Ok(recipe)
    }
}

impl GraphRecipe {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidRecipe(m));
        match *self {
            Self::DeepTree { depth, branching } | Self::WideTree { depth, branching } => {
                if depth == 0 || branching == 0 {
                    return fail(format!("tree needs depth and branching >= 1, got {depth} and {branching}"));
                }
                let mut size = 1usize;
                let mut level = 1usize;
                for _ in 1..depth {
                    level = level.checked_mul(branching).ok_or_else(|| Error::InvalidRecipe("tree too large".into()))?;
                    size = size.checked_add(level).ok_or_else(|| Error::InvalidRecipe("tree too large".into()))?;
                }
                if size > 1 << 24 {
                    return fail(format!("tree with {size} nodes is too large"));
                }
                Ok(())
            }
            Self::Bipartite { roots, leaves, fan_out } => {
                if roots == 0 || fan_out == 0 || fan_out > leaves {
                    return fail(format!("bipartite needs roots >= 1 and 1 <= fan_out <= leaves, got {roots}/{leaves}/{fan_out}"));
                }
                Ok(())
            }
            Self::Hourglass { roots, middle, leaves, edge_prob } => {
                if roots == 0 || middle == 0 || leaves == 0 || !(0.0..=1.0).contains(&edge_prob) {
                    return fail("hourglass needs nonempty layers and edge_prob in [0, 1]".into());
                }
                Ok(())
            }
            Self::LayeredRandom { layers, width, parents } => {
                if layers == 0 || width == 0 || (layers > 1 && (parents == 0 || parents > width)) {
                    return fail(format!("layered graph needs 1 <= parents <= width, got {parents} of {width}"));
                }
                Ok(())
            }
            Self::Trigenic { .. } => Ok(()),
        }
    }
}

/// Builds the graph for `recipe`; random recipes draw from `seed`.
pub fn gen_graph(recipe: &GraphRecipe, seed: u64) -> Result<Dag> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match recipe {
        GraphRecipe::DeepTree { depth, branching } | GraphRecipe::WideTree { depth, branching } => {
            complete_tree(*depth, *branching)
        }
        GraphRecipe::Bipartite { roots, leaves, fan_out } => {
            let mut edges = Vec::with_capacity(roots * fan_out);
            for r in 0..*roots {
                let mut picks = sample(&mut rng, *leaves, *fan_out).into_vec();
                picks.sort_unstable();
                edges.extend(picks.into_iter().map(|l| (r, roots + l)));
            }
            Dag::new(roots + leaves, &edges)
        }
        GraphRecipe::Hourglass { roots, middle, leaves, edge_prob } => {
            hourglass(&mut rng, *roots, *middle, *leaves, *edge_prob)
        }
        GraphRecipe::LayeredRandom { layers, width, parents } => {
            let mut edges = Vec::with_capacity(layers.saturating_sub(1) * width * parents);
            for layer in 1..*layers {
                for i in 0..*width {
                    let child = layer * width + i;
                    let mut picks = sample(&mut rng, *width, *parents).into_vec();
                    picks.sort_unstable();
                    edges.extend(picks.into_iter().map(|p| ((layer - 1) * width + p, child)));
                }
            }
            Dag::new(layers * width, &edges)
        }
        GraphRecipe::Trigenic { genes, pairs, triplets } => Ok(trigenic_graph(genes, pairs, triplets)?.0),
    }
}

/// Breadth-first numbering: the children of `v` are `b v + 1 ..= b v + b`.
fn complete_tree(depth: usize, branching: usize) -> Result<Dag> {
    let mut n = 0usize;
    let mut level = 1usize;
    for _ in 0..depth {
        n += level;
        level *= branching;
    }
    let edges: Vec<(usize, usize)> = (1..n).map(|c| ((c - 1) / branching, c)).collect();
    Dag::new(n, &edges)
}

fn hourglass(rng: &mut ChaCha8Rng, roots: usize, middle: usize, leaves: usize, p: f64) -> Result<Dag> {
    let mid = |i: usize| roots + i;
    let leaf = |i: usize| roots + middle + i;
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for r in 0..roots {
        for m in 0..middle {
            if rng.random_bool(p) {
                edges.insert((r, mid(m)));
            }
        }
    }
    for m in 0..middle {
        for l in 0..leaves {
            if rng.random_bool(p) {
                edges.insert((mid(m), leaf(l)));
            }
        }
    }
    // Repair pass: one random edge per unmet degree condition.
    let has_out = |e: &BTreeSet<(usize, usize)>, v: usize| e.range((v, 0)..(v + 1, 0)).next().is_some();
    let has_in = |e: &BTreeSet<(usize, usize)>, v: usize| e.iter().any(|&(_, c)| c == v);
    for r in 0..roots {
        if !has_out(&edges, r) {
            edges.insert((r, mid(rng.random_range(0..middle))));
        }
    }
    for m in 0..middle {
        if !has_in(&edges, mid(m)) {
            edges.insert((rng.random_range(0..roots), mid(m)));
        }
        if !has_out(&edges, mid(m)) {
            edges.insert((mid(m), leaf(rng.random_range(0..leaves))));
        }
    }
    for l in 0..leaves {
        if !has_in(&edges, leaf(l)) {
            edges.insert((mid(rng.random_range(0..middle)), leaf(l)));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Dag::new(roots + middle + leaves, &edges)
}

/// Gene, pair and triplet hypotheses. Nodes are numbered genes first, then
/// pairs, then triplets, in input order; labels are `a`, `a+b`, `a+b+c`.
/// Pairs are children of their genes and triplets of whichever of their
/// three pairs are present.
pub fn trigenic_graph(
    genes: &[String],
    pairs: &[[String; 2]],
    triplets: &[[String; 3]],
) -> Result<(Dag, Vec<String>)> {
    let mut gene_ix: HashMap<&str, usize> = HashMap::new();
    for (i, g) in genes.iter().enumerate() {
        if gene_ix.insert(g.as_str(), i).is_some() {
            return Err(Error::InvalidRecipe(format!("duplicate gene `{g}`")));
        }
    }
    let lookup = |g: &str| {
        gene_ix.get(g).copied().ok_or_else(|| Error::InvalidRecipe(format!("unknown gene `{g}`")))
    };
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    let mut labels: Vec<String> = genes.to_vec();
    let mut edges = Vec::new();
    let mut pair_ix: HashMap<(usize, usize), usize> = HashMap::new();
    for [a, b] in pairs {
        let (x, y) = (lookup(a)?, lookup(b)?);
        if x == y {
            return Err(Error::InvalidRecipe(format!("pair `{a}+{b}` repeats a gene")));
        }
        let node = labels.len();
        if pair_ix.insert(key(x, y), node).is_some() {
            return Err(Error::InvalidRecipe(format!("duplicate pair `{a}+{b}`")));
        }
        labels.push(format!("{a}+{b}"));
        edges.push((x, node));
        edges.push((y, node));
    }
    for [a, b, c] in triplets {
        let (x, y, z) = (lookup(a)?, lookup(b)?, lookup(c)?);
        if x == y || y == z || x == z {
            return Err(Error::InvalidRecipe(format!("triplet `{a}+{b}+{c}` repeats a gene")));
        }
        let node = labels.len();
        labels.push(format!("{a}+{b}+{c}"));
        for k in [key(x, y), key(x, z), key(y, z)] {
            if let Some(&pair) = pair_ix.get(&k) {
                edges.push((pair, node));
            }
        }
    }
    let dag = Dag::new(labels.len(), &edges)?;
    Ok((dag, labels))
}
