// SPDX-License-Identifier: Apache-2.0
//! Unoptimized transcriptions of the selection procedures, kept as oracles
//! for the production code paths.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Dag;
use crate::pvalues::PValues;
use crate::selection::{
    dagger_constants, fdx_budget, select_fdr_dagger, select_fdx, select_fwer_mg, water_fill_weights,
};

/// Push-style water filling: start with `1/Z` on each unrejected leaf and
/// repeatedly move the mass of any node that still has unrejected parents
/// to those parents in equal shares. The loop runs while such a node holds
/// positive mass.
pub fn reference_water_fill(dag: &Dag, rejected: &[bool]) -> Vec<f64> {
    let n = dag.node_count();
    let z = (0..n).filter(|&v| dag.is_leaf(v) && !rejected[v]).count();
    let mut g: Vec<f64> = (0..n).map(|v| if dag.is_leaf(v) && !rejected[v] { 1.0 / z as f64 } else { 0.0 }).collect();
    loop {
        let open = |v: usize| dag.parents(v).iter().copied().filter(|&w| !rejected[w]).collect::<Vec<_>>();
        let Some(v) = (0..n).find(|&v| g[v] > 0.0 && !open(v).is_empty()) else {
            break;
        };
        let targets = open(v);
        let share = g[v] / targets.len() as f64;
        for w in targets {
            g[w] += share;
        }
        g[v] = 0.0;
    }
    g
}

/// Rejects `{v not in S : parents(v) in S, p_v <= alpha pi_v}` until `S`
/// stops changing.
pub fn reference_mg(dag: &Dag, p: &[f64], alpha: f64) -> Vec<bool> {
    let n = dag.node_count();
    let mut s = vec![false; n];
    loop {
        let pi = reference_water_fill(dag, &s);
        let add: Vec<usize> = (0..n)
            .filter(|&v| !s[v] && dag.parents(v).iter().all(|&w| s[w]) && p[v] <= alpha * pi[v])
            .collect();
        if add.is_empty() {
            return s;
        }
        for v in add {
            s[v] = true;
        }
    }
}

/// FWER set plus the first `floor(|S0| gamma / (1 - gamma))` nodes of a
/// topological sort of the rest (smallest available index first).
pub fn reference_fdx(dag: &Dag, p: &[f64], gamma: f64, alpha: f64) -> Vec<bool> {
    let mut s = reference_mg(dag, p, alpha);
    let base = s.iter().filter(|&&x| x).count();
    let budget = fdx_budget(base, gamma);
    let mut placed = s.clone();
    for _ in 0..budget {
        let next = (0..dag.node_count()).find(|&v| !placed[v] && dag.parents(v).iter().all(|&w| placed[w]));
        match next {
            Some(v) => {
                placed[v] = true;
                s[v] = true;
            }
            None => break,
        }
    }
    s
}

/// Effective leaf and node counts from their recursive definitions.
pub fn reference_dagger_constants(dag: &Dag) -> (Vec<f64>, Vec<f64>, usize) {
    fn visit(dag: &Dag, v: usize, memo: &mut [Option<(f64, f64)>]) -> (f64, f64) {
        if let Some(x) = memo[v] {
            return x;
        }
        let out = if dag.children(v).is_empty() {
            (1.0, 1.0)
        } else {
            let mut l = 0.0;
            let mut m = 1.0;
            for &w in dag.children(v) {
                let (lw, mw) = visit(dag, w, memo);
                l += lw / dag.parents(w).len() as f64;
                m += mw / dag.parents(w).len() as f64;
            }
            (l, m)
        };
        memo[v] = Some(out);
        out
    }
    let n = dag.node_count();
    let mut memo = vec![None; n];
    let (l, m): (Vec<f64>, Vec<f64>) = (0..n).map(|v| visit(dag, v, &mut memo)).unzip();
    let leaves = (0..n).filter(|&v| dag.children(v).is_empty()).count();
    (l, m, leaves)
}

/// Depth-by-depth step-up, scanning `r` downward from `|V'_d|`.
pub fn reference_dagger(dag: &Dag, p: &[f64], alpha: f64) -> Vec<bool> {
    let n = dag.node_count();
    let (l, m, big_l) = reference_dagger_constants(dag);
    let big_l = big_l as f64;
    let mut s = vec![false; n];
    let mut prior = 0usize;
    let threshold = |v: usize, r: usize, prior: usize| {
        alpha * (l[v] / big_l) * (m[v] + r as f64 + prior as f64 - 1.0) / m[v]
    };
    for d in 1..=dag.max_depth() {
        let eligible: Vec<usize> =
            (0..n).filter(|&v| dag.depth(v) == d && dag.parents(v).iter().all(|&w| s[w])).collect();
        let r_d = (1..=eligible.len())
            .rev()
            .find(|&r| eligible.iter().filter(|&&v| p[v] <= threshold(v, r, prior)).count() >= r)
            .unwrap_or(0);
        if r_d > 0 {
            for &v in &eligible {
                if p[v] <= threshold(v, r_d, prior) {
                    s[v] = true;
                }
            }
        }
        prior += r_d;
    }
    s
}

/// Outcome of [`reference_equivalence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub equal: bool,
    /// Human-readable description of every mismatch.
    pub diffs: Vec<String>,
}

const WEIGHT_TOL: f64 = 1e-12;

/// Runs the production and reference versions of water filling, the FWER
/// procedure, the FDX hybrid and the depth-wise FDR step-up on one input and
/// reports any disagreement. Weights are compared at every intermediate
/// rejection set of the FWER run.
pub fn reference_equivalence(dag: &Dag, p: &PValues, alpha: f64, gamma: f64) -> Result<EquivalenceReport> {
    let mut diffs = Vec::new();
    let raw = p.as_slice();
    let as_set = |mask: &[bool]| mask.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v).collect::<Vec<_>>();

    let mg = select_fwer_mg(dag, p, alpha)?;
    let mg_ref = as_set(&reference_mg(dag, raw, alpha));
    if mg.rejected != mg_ref {
        diffs.push(format!("fwer-mg: production {:?}, reference {:?}", mg.rejected, mg_ref));
    }

    let mut state = vec![false; dag.node_count()];
    let check_weights = |state: &[bool], diffs: &mut Vec<String>| -> Result<()> {
        let fast = water_fill_weights(dag, state)?;
        let slow = reference_water_fill(dag, state);
        if let Some(v) = (0..fast.len()).find(|&v| (fast[v] - slow[v]).abs() > WEIGHT_TOL) {
            diffs.push(format!(
                "weights at rejected {:?}: node {v} production {} reference {}",
                as_set(state),
                fast[v],
                slow[v]
            ));
        }
        Ok(())
    };
    check_weights(&state, &mut diffs)?;
    for round in &mg.rounds {
        for &v in &round.nodes {
            state[v] = true;
        }
        check_weights(&state, &mut diffs)?;
    }

    let fdx = select_fdx(dag, p, gamma, alpha)?;
    let fdx_ref = as_set(&reference_fdx(dag, raw, gamma, alpha));
    if fdx.rejected != fdx_ref {
        diffs.push(format!("fdx: production {:?}, reference {:?}", fdx.rejected, fdx_ref));
    }

    let c = dagger_constants(dag);
    let (l, m, big_l) = reference_dagger_constants(dag);
    if c.total_leaves != big_l {
        diffs.push(format!("leaf count: production {}, reference {big_l}", c.total_leaves));
    }
    for v in 0..dag.node_count() {
        if (c.eff_leaves[v] - l[v]).abs() > WEIGHT_TOL || (c.eff_nodes[v] - m[v]).abs() > WEIGHT_TOL {
            diffs.push(format!(
                "constants at node {v}: production ({}, {}), reference ({}, {})",
                c.eff_leaves[v], c.eff_nodes[v], l[v], m[v]
            ));
        }
    }
    let dagger = select_fdr_dagger(dag, p, alpha)?;
    let dagger_ref = as_set(&reference_dagger(dag, raw, alpha));
    if dagger.rejected != dagger_ref {
        diffs.push(format!("fdr-dagger: production {:?}, reference {:?}", dagger.rejected, dagger_ref));
    }

    Ok(EquivalenceReport { equal: diffs.is_empty(), diffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_fixture_agrees() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let p = PValues::new(vec![0.01, 0.02, 0.9]).unwrap();
        let r = reference_equivalence(&g, &p, 0.05, 0.1).unwrap();
        assert!(r.equal, "{:?}", r.diffs);
        assert_eq!(reference_mg(&g, p.as_slice(), 0.05), vec![true, true, false]);
    }

    #[test]
    fn reference_water_fill_examples() {
        let star = Dag::new(3, &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(reference_water_fill(&star, &[false; 3]), vec![1.0, 0.0, 0.0]);
        assert_eq!(reference_water_fill(&star, &[true; 3]), vec![0.0; 3]);
    }
}
