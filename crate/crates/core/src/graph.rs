// SPDX-License-Identifier: Apache-2.0
//! Immutable, validated DAG with the structural caches that smoothing and
//! selection query in their inner loops.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};

/// A validated directed acyclic graph over dense node indices `0..n`.
///
/// All derived structure (adjacency, topological order, descendant
/// closures, depths) is computed once in [`Dag::new`]. Depth is 1-based:
/// roots have depth 1 and every other node sits one below its deepest parent.
#[derive(Debug, Clone)]
pub struct Dag {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
    closures: Vec<Vec<usize>>,
    depth: Vec<usize>,
    leaves: Vec<usize>,
    roots: Vec<usize>,
}

impl Dag {
    /// Validates `edges` (as `(parent, child)` pairs) and builds all caches.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut parents = vec![Vec::new(); node_count];
        let mut children = vec![Vec::new(); node_count];
        for &(p, c) in edges {
            for idx in [p, c] {
                if idx >= node_count {
                    return Err(Error::IndexOutOfRange { index: idx, node_count });
                }
            }
            if p == c {
                return Err(Error::SelfLoop { node: p });
            }
            if !seen.insert((p, c)) {
                return Err(Error::DuplicateEdge { parent: p, child: c });
            }
            parents[c].push(p);
            children[p].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let topo_order = kahn(node_count, &parents, &children, |_| true);
        if topo_order.len() != node_count {
            let mut placed = vec![false; node_count];
            for &v in &topo_order {
                placed[v] = true;
            }
            let node = placed.iter().position(|&b| !b).unwrap_or(0);
            return Err(Error::CycleDetected { node });
        }

        let mut depth = vec![1usize; node_count];
        for &v in &topo_order {
            depth[v] = parents[v].iter().map(|&p| depth[p] + 1).max().unwrap_or(1);
        }

        // Reverse-topological union of child closures; `stamp` dedups in O(1).
        let mut closures: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        let mut stamp = vec![usize::MAX; node_count];
        for &v in topo_order.iter().rev() {
            let mut set = vec![v];
            stamp[v] = v;
            for &c in &children[v] {
                for &w in &closures[c] {
                    if stamp[w] != v {
                        stamp[w] = v;
                        set.push(w);
                    }
                }
            }
            set.sort_unstable();
            closures[v] = set;
        }

        let leaves = (0..node_count).filter(|&v| children[v].is_empty()).collect();
        let roots = (0..node_count).filter(|&v| parents[v].is_empty()).collect();

        Ok(Self {
            node_count,
            edges: edges.to_vec(),
            parents,
            children,
            topo_order,
            closures,
            depth,
            leaves,
            roots,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Edges in the order they were supplied.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted parents of `v`.
    #[inline]
    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    /// Sorted children of `v`.
    #[inline]
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Deterministic topological order (Kahn, smallest ready index first).
    pub fn topological_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Sorted set of `v` and all its descendants.
    #[inline]
    pub fn closure(&self, v: usize) -> &[usize] {
        &self.closures[v]
    }

    /// Checked variant of [`Dag::closure`].
    pub fn descendant_closure(&self, v: usize) -> Result<&[usize]> {
        self.check_index(v)?;
        Ok(&self.closures[v])
    }

    /// 1-based longest-path depth from any root.
    #[inline]
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    #[inline]
    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    /// Nodes grouped by depth: element `d - 1` holds every node of depth `d`,
    /// in ascending index order.
    pub fn depth_partition(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.max_depth()];
        for v in 0..self.node_count {
            parts[self.depth[v] - 1].push(v);
        }
        parts
    }

    /// Deterministic topological order of the subgraph induced by the nodes
    /// with `keep[v] == true`.
    pub fn topological_order_within(&self, keep: &[bool]) -> Vec<usize> {
        kahn(self.node_count, &self.parents, &self.children, |v| keep[v])
    }

    pub fn check_index(&self, v: usize) -> Result<()> {
        if v < self.node_count {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: v, node_count: self.node_count })
        }
    }
}

fn kahn(
    n: usize,
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
    keep: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let mut indegree: Vec<usize> = (0..n)
        .map(|v| if keep(v) { parents[v].iter().filter(|&&p| keep(p)).count() } else { 0 })
        .collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| keep(v) && indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            if keep(c) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
    }
    order
}

/// Ground truth: `nonnull[v]` is true when hypothesis `v` is false (a signal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    nonnull: Vec<bool>,
}

impl Truth {
    /// Wraps a flag vector, rejecting assignments that are not closed upward
    /// (a nonnull node whose parent is null).
    pub fn new(dag: &Dag, nonnull: Vec<bool>) -> Result<Self> {
        if nonnull.len() != dag.node_count() {
            return Err(Error::Alignment { expected: dag.node_count(), got: nonnull.len() });
        }
        for &(p, c) in dag.edges() {
            if nonnull[c] && !nonnull[p] {
                return Err(Error::ConstraintViolation(format!(
                    "node {c} is nonnull but its parent {p} is null"
                )));
            }
        }
        Ok(Self { nonnull })
    }

    /// Forces every ancestor of a flagged node to be flagged too.
    pub fn closed_upward(dag: &Dag, mut nonnull: Vec<bool>) -> Self {
        for &v in dag.topological_order().iter().rev() {
            if nonnull[v] {
                for &p in dag.parents(v) {
                    nonnull[p] = true;
                }
            }
        }
        Self { nonnull }
    }

    pub fn all_null(n: usize) -> Self {
        Self { nonnull: vec![false; n] }
    }

    #[inline]
    pub fn is_nonnull(&self, v: usize) -> bool {
        self.nonnull[v]
    }

    pub fn flags(&self) -> &[bool] {
        &self.nonnull
    }

    pub fn len(&self) -> usize {
        self.nonnull.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nonnull.is_empty()
    }

    pub fn nonnull_count(&self) -> usize {
        self.nonnull.iter().filter(|&&b| b).count()
    }
}
