// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{check_aligned, check_alpha, Method, SelectionResult};
use crate::error::Result;
use crate::graph::Dag;
use crate::pvalues::PValues;

/// Per-node effective leaf and node counts used by the depth-wise step-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaggerConstants {
    /// `l_v`: leaves get 1, others sum `l_w / |parents(w)|` over children.
    pub eff_leaves: Vec<f64>,
    /// `m_v`: leaves get 1, others `1 + sum m_w / |parents(w)|`.
    pub eff_nodes: Vec<f64>,
    /// Number of leaves.
    pub total_leaves: usize,
}

pub fn dagger_constants(dag: &Dag) -> DaggerConstants {
    let n = dag.node_count();
    let mut l = vec![0.0; n];
    let mut m = vec![0.0; n];
    for &v in dag.topological_order().iter().rev() {
        if dag.is_leaf(v) {
            l[v] = 1.0;
            m[v] = 1.0;
            continue;
        }
        let (mut sl, mut sm) = (0.0, 1.0);
        for &w in dag.children(v) {
            let k = dag.parents(w).len() as f64;
            sl += l[w] / k;
            sm += m[w] / k;
        }
        l[v] = sl;
        m[v] = sm;
    }
    DaggerConstants { eff_leaves: l, eff_nodes: m, total_leaves: dag.leaves().len() }
}

impl DaggerConstants {
    /// `alpha (l_v / L) (m_v + r + prior - 1) / m_v`, where `prior` is the
    /// number of rejections at shallower depths. Evaluated as a single
    /// quotient so that an edgeless graph yields exactly `alpha * r / n`.
    #[inline]
    pub fn threshold(&self, v: usize, alpha: f64, r: usize, prior: usize) -> f64 {
        let m = self.eff_nodes[v];
        (alpha * self.eff_leaves[v] * (m + r as f64 + prior as f64 - 1.0)) / (self.total_leaves as f64 * m)
    }
}

/// Depth-wise generalized step-up controlling the FDR at `alpha`.
///
/// At depth `d` the eligible nodes are those whose parents are all rejected.
/// `R_d` is the largest `r` for which at least `r` eligible nodes satisfy
/// `p_v <= threshold(v, r)`; those nodes at `R_d` are rejected. If no `r`
/// qualifies, `R_d = 0` and nothing deeper can become eligible.
///
/// Recorded thresholds use `max(R_d, 1)`.
pub fn select_fdr_dagger(dag: &Dag, p: &PValues, alpha: f64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    check_aligned(dag, p)?;
    let p = p.as_slice();
    let n = dag.node_count();
    let c = dagger_constants(dag);
    let mut out = SelectionResult::new(Method::FdrDagger, alpha, None, n);
    let mut rejected = vec![false; n];
    let mut prior = 0usize;

    for (d, layer) in dag.depth_partition().into_iter().enumerate() {
        let eligible: Vec<usize> =
            layer.into_iter().filter(|&v| dag.parents(v).iter().all(|&q| rejected[q])).collect();
        if eligible.is_empty() {
            break;
        }
        let size = eligible.len();
        // Smallest qualifying r per node (size + 1 when none), then a
        // histogram turns the count condition into one cumulative scan.
        let first_r: Vec<usize> = eligible
            .iter()
            .map(|&v| {
                let (mut lo, mut hi) = (1usize, size + 1);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if p[v] <= c.threshold(v, alpha, mid, prior) {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            })
            .collect();
        let mut hist = vec![0usize; size + 2];
        for &r in &first_r {
            hist[r] += 1;
        }
        let mut r_d = 0;
        let mut count = 0;
        for (r, &h) in hist.iter().enumerate().take(size + 1).skip(1) {
            count += h;
            if count >= r {
                r_d = r;
            }
        }
        let shown = r_d.max(1);
        for &v in &eligible {
            out.thresholds[v] = Some(c.threshold(v, alpha, shown, prior));
        }
        if r_d == 0 {
            break;
        }
        let chosen: Vec<usize> =
            eligible.iter().zip(&first_r).filter(|&(_, &r)| r <= r_d).map(|(&v, _)| v).collect();
        for &v in &chosen {
            rejected[v] = true;
        }
        prior += r_d;
        out.push_round(d + 1, chosen);
    }
    Ok(out)
}
