// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::Method;
use crate::simulation::{run_benchmark, BenchmarkConfig, BenchmarkSummary, CellKey};

/// Error rate being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorTarget {
    Fwer,
    Fdx,
    Fdr,
}

impl ErrorTarget {
    /// Methods whose guarantee covers this error rate.
    pub fn covers(self, method: Method) -> bool {
        match self {
            ErrorTarget::Fwer => method == Method::FwerMg,
            ErrorTarget::Fdx => matches!(method, Method::FwerMg | Method::Fdx),
            ErrorTarget::Fdr => matches!(method, Method::FwerMg | Method::FdrDagger | Method::Bh),
        }
    }
}

impl fmt::Display for ErrorTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorTarget::Fwer => "fwer",
            ErrorTarget::Fdx => "fdx",
            ErrorTarget::Fdr => "fdr",
        })
    }
}

impl FromStr for ErrorTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fwer" => Ok(ErrorTarget::Fwer),
            "fdx" => Ok(ErrorTarget::Fdx),
            "fdr" => Ok(ErrorTarget::Fdr),
            _ => Err(Error::Config(format!("unknown error target `{s}` (expected fwer, fdx or fdr)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCell {
    pub key: CellKey,
    pub trials: usize,
    pub estimate: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorControlReport {
    pub target: ErrorTarget,
    pub cells: Vec<ErrorCell>,
    pub pass: bool,
}

/// Runs the benchmark and checks every cell's empirical error against
/// `alpha + 3 SE`. For FWER and FDX the SE is the binomial one at `alpha`;
/// for FDR it is the standard error of the mean FDP.
pub fn check_error_control(config: &BenchmarkConfig, target: ErrorTarget) -> Result<ErrorControlReport> {
    for s in &config.selectors {
        if !target.covers(s.method) {
            return Err(Error::Config(format!("{} does not control the {target}", s.method)));
        }
    }
    let summaries = run_benchmark(config)?;
    Ok(assess(&summaries, target))
}

/// Applies the error bound to precomputed summaries.
pub fn assess(summaries: &[BenchmarkSummary], target: ErrorTarget) -> ErrorControlReport {
    let cells: Vec<ErrorCell> = summaries
        .iter()
        .map(|s| {
            let a = s.key.alpha;
            let t = s.trials as f64;
            let (estimate, se) = match target {
                ErrorTarget::Fwer => (s.err_fwer, (a * (1.0 - a) / t).sqrt()),
                ErrorTarget::Fdx => (s.err_fdx, (a * (1.0 - a) / t).sqrt()),
                ErrorTarget::Fdr => (s.err_fdr, s.se_fdr),
            };
            let bound = a + 3.0 * se;
            ErrorCell {
                key: s.key.clone(),
                trials: s.trials,
                estimate,
                standard_error: se,
                bound,
                margin: bound - estimate,
                pass: estimate <= bound,
                power: s.power,
            }
        })
        .collect();
    let pass = cells.iter().all(|c| c.pass);
    ErrorControlReport { target, cells, pass }
}
