// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::graph::Dag;

/// All-parents water-filling weights for the rejection mask `rejected`.
///
/// Each unrejected leaf starts with mass `1/Z` (`Z` = number of unrejected
/// leaves); mass at an unrejected node is split equally among its unrejected
/// parents, and it stops at nodes whose parents are all rejected. Those
/// front nodes carry the returned weight; everything else gets 0.
pub fn water_fill_weights(dag: &Dag, rejected: &[bool]) -> Result<Vec<f64>> {
    if rejected.len() != dag.node_count() {
        return Err(Error::Alignment { expected: dag.node_count(), got: rejected.len() });
    }
    for &(p, c) in dag.edges() {
        if rejected[c] && !rejected[p] {
            return Err(Error::ConstraintViolation(format!(
                "rejection set is not closed upward: {c} is rejected but its parent {p} is not"
            )));
        }
    }
    Ok(water_fill_unchecked(dag, rejected))
}

pub(crate) fn water_fill_unchecked(dag: &Dag, rejected: &[bool]) -> Vec<f64> {
    let n = dag.node_count();
    let z = dag.leaves().iter().filter(|&&v| !rejected[v]).count();
    let mut g = vec![0.0; n];
    if z == 0 {
        return g;
    }
    let open_parents: Vec<usize> =
        (0..n).map(|v| dag.parents(v).iter().filter(|&&p| !rejected[p]).count()).collect();
    let leaf_mass = 1.0 / z as f64;
    let mut mass = vec![0.0; n];
    for &v in dag.topological_order().iter().rev() {
        if rejected[v] {
            continue;
        }
        mass[v] = if dag.is_leaf(v) {
            leaf_mass
        } else {
            dag.children(v).iter().filter(|&&w| !rejected[w]).map(|&w| mass[w] / open_parents[w] as f64).sum()
        };
        if open_parents[v] == 0 {
            g[v] = mass[v];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_star() {
        let chain = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(water_fill_weights(&chain, &[false; 3]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(water_fill_weights(&chain, &[true, false, false]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(water_fill_weights(&chain, &[true; 3]).unwrap(), vec![0.0; 3]);
        let star = Dag::new(3, &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(water_fill_weights(&star, &[false; 3]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(water_fill_weights(&star, &[true, false, false]).unwrap(), vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn shared_child_splits_its_mass() {
        // 0 -> 2 <- 1, 1 -> 3
        let g = Dag::new(4, &[(0, 2), (1, 2), (1, 3)]).unwrap();
        let w = water_fill_weights(&g, &[false; 4]).unwrap();
        assert_eq!(w, vec![0.25, 0.75, 0.0, 0.0]);
        let w = water_fill_weights(&g, &[false, true, false, false]).unwrap();
        assert_eq!(w, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn rejects_non_closed_sets() {
        let chain = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(water_fill_weights(&chain, &[false, true, false]), Err(Error::ConstraintViolation(_))));
        assert!(matches!(water_fill_weights(&chain, &[false]), Err(Error::Alignment { .. })));
    }
}
