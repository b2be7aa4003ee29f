// SPDX-License-Identifier: Apache-2.0

use super::{check_alpha, Method, SelectionResult};
use crate::error::Result;
use crate::pvalues::PValues;

/// Benjamini–Hochberg step-up at `alpha`, ignoring any graph.
///
/// Rejects the `k` smallest p-values for the largest `k` with
/// `p_(k) <= alpha k / n`; ties in the sort are broken by node index. Every
/// node's recorded threshold is `alpha max(k, 1) / n`.
pub fn select_bh(p: &PValues, alpha: f64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    let n = p.len();
    let p = p.as_slice();
    let mut out = SelectionResult::new(Method::Bh, alpha, None, n);
    if n == 0 {
        return Ok(out);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let nf = n as f64;
    let k = (1..=n).rev().find(|&k| p[order[k - 1]] <= alpha * k as f64 / nf).unwrap_or(0);
    let t = alpha * k.max(1) as f64 / nf;
    out.thresholds.iter_mut().for_each(|x| *x = Some(t));
    out.push_round(1, order[..k].to_vec());
    Ok(out)
}
