// SPDX-License-Identifier: Apache-2.0

use super::mg::run_mg;
use super::{check_aligned, check_alpha, Method, SelectionResult};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::pvalues::PValues;

/// Absorbs representation error in `|S0| * gamma / (1 - gamma)` so that
/// exact integer budgets are not floored one short.
const BUDGET_EPS: f64 = 1e-9;

/// Decides the order in which unrejected nodes are added on top of the FWER
/// set. Every prefix of the returned order must be closed upward together
/// with `rejected`.
pub trait AugmentationPolicy {
    fn order(&self, dag: &Dag, p: &PValues, rejected: &[bool]) -> Vec<usize>;
}

/// Deterministic topological order of the unrejected subgraph, smallest
/// ready index first.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopologicalAugmentation;

impl AugmentationPolicy for TopologicalAugmentation {
    fn order(&self, dag: &Dag, _p: &PValues, rejected: &[bool]) -> Vec<usize> {
        let keep: Vec<bool> = rejected.iter().map(|r| !r).collect();
        dag.topological_order_within(&keep)
    }
}

/// Number of nodes added on top of an FWER set of size `base`.
pub fn fdx_budget(base: usize, gamma: f64) -> usize {
    (base as f64 * gamma / (1.0 - gamma) + BUDGET_EPS).floor() as usize
}

/// FWER selection at `alpha` followed by `floor(|S0| gamma / (1 - gamma))`
/// extra nodes in topological order; controls `P(FDP > gamma) <= alpha`.
pub fn select_fdx(dag: &Dag, p: &PValues, gamma: f64, alpha: f64) -> Result<SelectionResult> {
    select_fdx_with(dag, p, gamma, alpha, &TopologicalAugmentation)
}

/// [`select_fdx`] with a custom augmentation order.
pub fn select_fdx_with(
    dag: &Dag,
    p: &PValues,
    gamma: f64,
    alpha: f64,
    policy: &dyn AugmentationPolicy,
) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    check_aligned(dag, p)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    let mut out = run_mg(dag, p.as_slice(), alpha, Method::Fdx, Some(gamma));
    let budget = fdx_budget(out.len(), gamma);
    if budget == 0 {
        return Ok(out);
    }
    let mut rejected = out.rejected_mask();
    let order = policy.order(dag, p, &rejected);

    let mut round_of = vec![0usize; dag.node_count()];
    for r in &out.rounds {
        for &v in &r.nodes {
            round_of[v] = r.round;
        }
    }
    let base_round = out.rounds.last().map_or(0, |r| r.round);
    let mut extra: Vec<(usize, usize)> = Vec::with_capacity(budget);
    for v in order.into_iter().take(budget) {
        if rejected[v] {
            return Err(Error::ConstraintViolation(format!("augmentation order repeats rejected node {v}")));
        }
        let mut round = base_round;
        for &q in dag.parents(v) {
            if !rejected[q] {
                return Err(Error::ConstraintViolation(format!(
                    "augmentation order adds {v} before its parent {q}"
                )));
            }
            round = round.max(round_of[q]);
        }
        rejected[v] = true;
        round_of[v] = round + 1;
        extra.push((round + 1, v));
    }
    extra.sort_unstable();
    for chunk in extra.chunk_by(|a, b| a.0 == b.0) {
        out.push_round(chunk[0].0, chunk.iter().map(|&(_, v)| v).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::select_fwer_mg;

    fn pv(v: &[f64]) -> PValues {
        PValues::new(v.to_vec()).unwrap()
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(fdx_budget(0, 0.1), 0);
        assert_eq!(fdx_budget(9, 0.1), 1);
        assert_eq!(fdx_budget(8, 0.1), 0);
        assert_eq!(fdx_budget(18, 0.1), 2);
        assert_eq!(fdx_budget(5, 0.0), 0);
        assert_eq!(fdx_budget(3, 0.5), 3);
        assert_eq!(fdx_budget(7, 0.2), 1);
        assert_eq!(fdx_budget(8, 0.2), 2);
    }

    #[test]
    fn empty_base_and_zero_gamma() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(select_fdx(&g, &pv(&[0.9, 0.9, 0.9]), 0.5, 0.05).unwrap().is_empty());
        let p = pv(&[0.01, 0.02, 0.9]);
        let base = select_fwer_mg(&g, &p, 0.05).unwrap();
        assert_eq!(select_fdx(&g, &p, 0.0, 0.05).unwrap().rejected, base.rejected);
        assert!(select_fdx(&g, &p, 1.0, 0.05).is_err());
    }

    #[test]
    fn nine_rejections_buy_one_extra() {
        // Root 0 with children 1..=8 and a second root 9 with child 10.
        let mut edges: Vec<(usize, usize)> = (1..=8).map(|c| (0, c)).collect();
        edges.push((9, 10));
        let g = Dag::new(11, &edges).unwrap();
        let mut p = vec![1e-6; 9];
        p.extend([0.9, 0.9]);
        let r = select_fdx(&g, &pv(&p), 0.1, 0.05).unwrap();
        assert_eq!(r.len(), 10);
        assert!(r.contains(9) && !r.contains(10));
        r.check_constraint(&g).unwrap();
        assert_eq!(r.rounds.last().unwrap().nodes, vec![9]);
    }

    #[test]
    fn augmentation_takes_everything_when_budget_exceeds_remainder() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let r = select_fdx(&g, &pv(&[0.001, 0.9, 0.9]), 0.9, 0.05).unwrap();
        assert_eq!(r.rejected, vec![0, 1, 2]);
        r.check_constraint(&g).unwrap();
    }

    struct Backwards;
    impl AugmentationPolicy for Backwards {
        fn order(&self, dag: &Dag, _p: &PValues, rejected: &[bool]) -> Vec<usize> {
            let keep: Vec<bool> = rejected.iter().map(|r| !r).collect();
            let mut o = dag.topological_order_within(&keep);
            o.reverse();
            o
        }
    }

    #[test]
    fn bad_policy_is_reported() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let err = select_fdx_with(&g, &pv(&[0.001, 0.9, 0.9]), 0.5, 0.05, &Backwards).unwrap_err();
        assert!(matches!(err, Error::ConstraintViolation(_)));
    }
}
