// SPDX-License-Identifier: Apache-2.0

use super::water::water_fill_unchecked;
use super::{check_aligned, check_alpha, Method, SelectionResult};
use crate::error::Result;
use crate::graph::Dag;
use crate::pvalues::PValues;

/// Sequential all-parents rejection controlling the FWER at `alpha`.
///
/// Each round recomputes the water-filling weights `g` for the current set
/// and rejects every front node with `p_v <= alpha * g_v`, until a round
/// rejects nothing.
pub fn select_fwer_mg(dag: &Dag, p: &PValues, alpha: f64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    check_aligned(dag, p)?;
    Ok(run_mg(dag, p.as_slice(), alpha, Method::FwerMg, None))
}

pub(crate) fn run_mg(dag: &Dag, p: &[f64], alpha: f64, method: Method, gamma: Option<f64>) -> SelectionResult {
    let n = dag.node_count();
    let mut out = SelectionResult::new(method, alpha, gamma, n);
    let mut rejected = vec![false; n];
    for round in 1..=n {
        let g = water_fill_unchecked(dag, &rejected);
        let mut newly = Vec::new();
        for v in 0..n {
            if rejected[v] || !dag.parents(v).iter().all(|&q| rejected[q]) {
                continue;
            }
            let t = alpha * g[v];
            out.thresholds[v] = Some(t);
            if p[v] <= t {
                newly.push(v);
            }
        }
        if newly.is_empty() {
            break;
        }
        for &v in &newly {
            rejected[v] = true;
        }
        out.push_round(round, newly);
    }
    out
}
