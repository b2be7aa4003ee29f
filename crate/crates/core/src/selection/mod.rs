// SPDX-License-Identifier: Apache-2.0
//! Selection procedures that turn (smoothed) p-values into a rejection set.
//!
//! All graph-aware procedures return sets that respect the logical
//! constraint: a node is only rejected once all of its parents are.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::pvalues::PValues;

mod bh;
mod dagger;
mod fdx;
mod mg;
mod water;

pub use bh::select_bh;
pub use dagger::{dagger_constants, select_fdr_dagger, DaggerConstants};
pub use fdx::{fdx_budget, select_fdx, select_fdx_with, AugmentationPolicy, TopologicalAugmentation};
pub use mg::select_fwer_mg;
pub use water::water_fill_weights;

/// Selection procedure tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fwer-mg")]
    FwerMg,
    #[serde(rename = "fdx")]
    Fdx,
    #[serde(rename = "fdr-dagger")]
    FdrDagger,
    #[serde(rename = "bh")]
    Bh,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::FwerMg, Method::Fdx, Method::FdrDagger, Method::Bh];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FwerMg => "fwer-mg",
            Method::Fdx => "fdx",
            Method::FdrDagger => "fdr-dagger",
            Method::Bh => "bh",
        }
    }

    /// Runs the procedure. `gamma` is only read by [`Method::Fdx`].
    pub fn select(self, dag: &Dag, p: &PValues, alpha: f64, gamma: f64) -> Result<SelectionResult> {
        match self {
            Method::FwerMg => select_fwer_mg(dag, p, alpha),
            Method::Fdx => select_fdx(dag, p, gamma, alpha),
            Method::FdrDagger => select_fdr_dagger(dag, p, alpha),
            Method::Bh => select_bh(p, alpha),
        }
    }

    /// Whether outputs are guaranteed to respect the graph.
    pub fn respects_graph(self) -> bool {
        self != Method::Bh
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected fwer-mg, fdx, fdr-dagger or bh)")))
    }
}

/// Nodes rejected together in one pass of a procedure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub round: usize,
    pub nodes: Vec<usize>,
}

/// Output of a selection procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub alpha: f64,
    pub gamma: Option<f64>,
    /// Rejected nodes, ascending.
    pub rejected: Vec<usize>,
    /// Rounds in order; together they partition `rejected`.
    pub rounds: Vec<Round>,
    /// The last threshold each node's p-value was compared against, or
    /// `None` if the node never became eligible.
    pub thresholds: Vec<Option<f64>>,
}

impl SelectionResult {
    pub(crate) fn new(method: Method, alpha: f64, gamma: Option<f64>, node_count: usize) -> Self {
        Self { method, alpha, gamma, rejected: Vec::new(), rounds: Vec::new(), thresholds: vec![None; node_count] }
    }

    /// Appends a round and keeps `rejected` sorted.
    pub(crate) fn push_round(&mut self, round: usize, mut nodes: Vec<usize>) {
        if nodes.is_empty() {
            return;
        }
        nodes.sort_unstable();
        self.rejected.extend_from_slice(&nodes);
        self.rejected.sort_unstable();
        self.rounds.push(Round { round, nodes });
    }

    pub fn len(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.rejected.binary_search(&v).is_ok()
    }

    pub fn rejected_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.thresholds.len()];
        for &v in &self.rejected {
            mask[v] = true;
        }
        mask
    }

    /// Checks that every rejected node has all parents rejected, and that
    /// each round only contains nodes whose parents fell in earlier rounds.
    pub fn check_constraint(&self, dag: &Dag) -> Result<()> {
        let mask = self.rejected_mask();
        for &(p, c) in dag.edges() {
            if mask[c] && !mask[p] {
                return Err(Error::ConstraintViolation(format!("node {c} rejected without its parent {p}")));
            }
        }
        let mut round_of = vec![usize::MAX; dag.node_count()];
        let mut last = 0;
        for r in &self.rounds {
            if r.round <= last {
                return Err(Error::ConstraintViolation(format!("round {} out of order", r.round)));
            }
            last = r.round;
            for &v in &r.nodes {
                round_of[v] = r.round;
            }
        }
        for &v in &self.rejected {
            for &p in dag.parents(v) {
                if round_of[p] >= round_of[v] {
                    return Err(Error::ConstraintViolation(format!(
                        "node {v} (round {}) shares or precedes the round of parent {p}",
                        round_of[v]
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

pub(crate) fn check_aligned(dag: &Dag, p: &PValues) -> Result<()> {
    if p.len() == dag.node_count() {
        Ok(())
    } else {
        Err(Error::Alignment { expected: dag.node_count(), got: p.len() })
    }
}
