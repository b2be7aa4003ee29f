// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Truth;
use crate::selection::SelectionResult;

/// Outcome of one selection against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Share of nonnull nodes rejected. With no nonnulls this is 1 when
    /// nothing null was rejected and 0 otherwise.
    pub power: f64,
    /// False rejections over `max(1, |rejected|)`.
    pub fdp: f64,
    pub any_false: bool,
    pub fdp_exceeds_gamma: bool,
}

pub fn compute_metrics(result: &SelectionResult, truth: &Truth, gamma: f64) -> Result<TrialMetrics> {
    if result.thresholds.len() != truth.len() {
        return Err(Error::Alignment { expected: truth.len(), got: result.thresholds.len() });
    }
    let true_hits = result.rejected.iter().filter(|&&v| truth.is_nonnull(v)).count();
    let false_hits = result.rejected.len() - true_hits;
    let signals = truth.nonnull_count();
    let power = if signals == 0 {
        if false_hits == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        true_hits as f64 / signals as f64
    };
    let fdp = false_hits as f64 / result.rejected.len().max(1) as f64;
    Ok(TrialMetrics { power, fdp, any_false: false_hits > 0, fdp_exceeds_gamma: fdp > gamma })
}
