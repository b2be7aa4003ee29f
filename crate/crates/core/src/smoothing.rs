// SPDX-License-Identifier: Apache-2.0
//! Descendant smoothing: merge each node's p-value with the p-values of its
//! support set and map the merged statistic back through its exact null CDF.
//!
//! Every merging rule here is coordinatewise nondecreasing in the inputs, so
//! smoothed values are super-uniform for null nodes whenever the null inputs
//! are independent uniforms.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::null_dist::{
    beta_cdf_int, chi_square_sf_even, irwin_hall_cdf, normal_quantile_unchecked, std_normal_cdf,
    EmpiricalCdf, IRWIN_HALL_MAX_N, MIN_MC_SAMPLES,
};
use crate::pvalues::{clamp_p, PValues};
use crate::rng::derive_seed;

/// Default Monte Carlo budget for null CDFs without a closed form.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_MC_SEED: u64 = 0x5EED;

/// Which nodes a merging rule reads for node `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// `v` and its direct children.
    SelfPlusChildren,
    /// `v` and every descendant.
    AllDescendants,
}

/// A smoothing rule and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SmoothingSpec {
    None,
    Fisher { support: Support },
    Stouffer,
    Tippett,
    /// Order-statistic merge using the `k`-th smallest p-value, clamped per
    /// node to the support size.
    Ruger { k: usize },
    /// Power mean with exponent `r` in (0, 1].
    GeneralizedMean { r: f64, mc_samples: usize, seed: u64 },
    ConservativeStouffer { support: Support },
}

impl SmoothingSpec {
    pub fn fisher() -> Self {
        Self::Fisher { support: Support::AllDescendants }
    }

    pub fn generalized_mean(r: f64) -> Self {
        Self::GeneralizedMean { r, mc_samples: DEFAULT_MC_SAMPLES, seed: DEFAULT_MC_SEED }
    }

    pub fn conservative_stouffer() -> Self {
        Self::ConservativeStouffer { support: Support::SelfPlusChildren }
    }

    /// Overrides the Monte Carlo budget and seed; a no-op for rules with a
    /// closed-form null.
    pub fn with_monte_carlo(self, samples: usize, mc_seed: u64) -> Self {
        match self {
            Self::GeneralizedMean { r, .. } => Self::GeneralizedMean { r, mc_samples: samples, seed: mc_seed },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Ruger { k: 0 } => Err(Error::SpecMismatch("ruger needs k >= 1".into())),
            Self::GeneralizedMean { r, mc_samples, .. } => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::SpecMismatch(format!("generalized mean needs r in (0, 1], got {r}")));
                }
                if mc_samples < MIN_MC_SAMPLES {
                    return Err(Error::SpecMismatch(format!(
                        "generalized mean needs at least {MIN_MC_SAMPLES} Monte Carlo samples, got {mc_samples}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::None)
    }

    fn support(&self) -> Support {
        match *self {
            Self::Fisher { support } | Self::ConservativeStouffer { support } => support,
            _ => Support::AllDescendants,
        }
    }
}

impl fmt::Display for SmoothingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::Fisher { support: Support::AllDescendants } => f.write_str("fisher"),
            Self::Fisher { support: Support::SelfPlusChildren } => f.write_str("fisher:children"),
            Self::Stouffer => f.write_str("stouffer"),
            Self::Tippett => f.write_str("tippett"),
            Self::Ruger { k } => write!(f, "ruger:{k}"),
            Self::GeneralizedMean { r, .. } => write!(f, "genmean:{r}"),
            Self::ConservativeStouffer { support: Support::SelfPlusChildren } => f.write_str("cons-stouffer"),
            Self::ConservativeStouffer { support: Support::AllDescendants } => {
                f.write_str("cons-stouffer:descendants")
            }
        }
    }
}

impl FromStr for SmoothingSpec {
    type Err = Error;

    /// Parses `none`, `fisher[:children|:descendants]`, `stouffer`, `tippett`,
    /// `ruger:<k>`, `genmean:<r>`, `cons-stouffer[:children|:descendants]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let no_arg = |spec: SmoothingSpec| match arg {
            None => Ok(spec),
            Some(a) => Err(Error::SpecMismatch(format!("`{name}` takes no parameter, got `{a}`"))),
        };
        let support = |default: Support| match arg {
            None => Ok(default),
            Some("children") => Ok(Support::SelfPlusChildren),
            Some("descendants") => Ok(Support::AllDescendants),
            Some(a) => Err(Error::SpecMismatch(format!("unknown support `{a}` for `{name}`"))),
        };
        let spec = match name {
            "none" => no_arg(Self::None)?,
            "fisher" => Self::Fisher { support: support(Support::AllDescendants)? },
            "stouffer" => no_arg(Self::Stouffer)?,
            "tippett" => no_arg(Self::Tippett)?,
            "ruger" => {
                let a = arg.ok_or_else(|| Error::SpecMismatch("ruger needs `ruger:<k>`".into()))?;
                let k = a.parse().map_err(|_| Error::SpecMismatch(format!("bad ruger k `{a}`")))?;
                Self::Ruger { k }
            }
            "genmean" => {
                let a = arg.ok_or_else(|| Error::SpecMismatch("genmean needs `genmean:<r>`".into()))?;
                let r = a.parse().map_err(|_| Error::SpecMismatch(format!("bad genmean r `{a}`")))?;
                Self::generalized_mean(r)
            }
            "cons-stouffer" => Self::ConservativeStouffer { support: support(Support::SelfPlusChildren)? },
            other => return Err(Error::SpecMismatch(format!("unknown smoothing `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A smoothing rule bound to one graph, with support sets and any Monte
/// Carlo null tables precomputed so it can be applied to many p-value
/// vectors.
#[derive(Debug, Clone)]
pub struct Smoother<'a> {
    dag: &'a Dag,
    spec: SmoothingSpec,
    children_support: Option<Vec<Vec<usize>>>,
    mc_tables: BTreeMap<usize, EmpiricalCdf>,
}

impl<'a> Smoother<'a> {
    pub fn new(dag: &'a Dag, spec: SmoothingSpec) -> Result<Self> {
        spec.validate()?;
        let children_support = (spec.support() == Support::SelfPlusChildren).then(|| {
            (0..dag.node_count())
                .map(|v| {
                    let mut s = Vec::with_capacity(1 + dag.children(v).len());
                    s.push(v);
                    s.extend_from_slice(dag.children(v));
                    s.sort_unstable();
                    s
                })
                .collect()
        });

        let mut mc_tables = BTreeMap::new();
        if let SmoothingSpec::GeneralizedMean { r, mc_samples, seed } = spec {
            let mut sizes: Vec<usize> = (0..dag.node_count()).map(|v| dag.closure(v).len()).collect();
            sizes.sort_unstable();
            sizes.dedup();
            sizes.retain(|&m| m > 1 && !(r == 1.0 && m <= IRWIN_HALL_MAX_N));
            let tables: Vec<(usize, EmpiricalCdf)> = sizes
                .par_iter()
                .map(|&m| {
                    let table = EmpiricalCdf::build(
                        |u| power_mean(u.iter().copied(), r),
                        m,
                        mc_samples,
                        derive_seed(seed, &[m as u64]),
                    )?;
                    Ok((m, table))
                })
                .collect::<Result<_>>()?;
            mc_tables.extend(tables);
        }
        Ok(Self { dag, spec, children_support, mc_tables })
    }

    pub fn spec(&self) -> &SmoothingSpec {
        &self.spec
    }

    pub fn dag(&self) -> &Dag {
        self.dag
    }

    #[inline]
    fn support_of(&self, v: usize) -> &[usize] {
        match &self.children_support {
            Some(s) => &s[v],
            None => self.dag.closure(v),
        }
    }

    /// Smooths one p-value vector.
    pub fn apply(&self, p: &PValues) -> Result<PValues> {
        let n = self.dag.node_count();
        if p.len() != n {
            return Err(Error::Alignment { expected: n, got: p.len() });
        }
        let raw = p.as_slice();
        let out: Vec<f64> = match &self.spec {
            SmoothingSpec::None => raw.to_vec(),
            SmoothingSpec::Fisher { .. } => {
                let lnp: Vec<f64> = raw.iter().map(|&x| clamp_p(x).ln()).collect();
                self.per_node(raw, |s| {
                    let stat = -2.0 * s.iter().map(|&c| lnp[c]).sum::<f64>();
                    chi_square_sf_even(stat, s.len())
                })
            }
            SmoothingSpec::Stouffer => {
                let z = self.z_scores(raw);
                self.per_node(raw, |s| {
                    let sum: f64 = s.iter().map(|&c| z[c]).sum();
                    std_normal_cdf(sum / (s.len() as f64).sqrt())
                })
            }
            SmoothingSpec::Tippett => self.order_statistic(raw, 1),
            SmoothingSpec::Ruger { k } => self.order_statistic(raw, *k),
            SmoothingSpec::GeneralizedMean { r, .. } => {
                let r = *r;
                self.per_node(raw, |s| {
                    let m = s.len();
                    if let Some(table) = self.mc_tables.get(&m) {
                        table.eval(power_mean(s.iter().map(|&c| raw[c]), r))
                    } else {
                        let sum: f64 = s.iter().map(|&c| raw[c]).sum();
                        irwin_hall_cdf(sum, m).expect("closure size within the exact range")
                    }
                })
            }
            SmoothingSpec::ConservativeStouffer { .. } => {
                let z = self.z_scores(raw);
                let mut out = self.per_node(raw, |s| {
                    let mean = s.iter().map(|&c| z[c]).sum::<f64>() / s.len() as f64;
                    conservative_tail(mean)
                });
                // Singletons: the weighted sum is Z_v itself.
                for (v, o) in out.iter_mut().enumerate() {
                    if self.support_of(v).len() == 1 && raw[v] >= 0.5 {
                        *o = 1.0;
                    }
                }
                out
            }
        };
        Ok(PValues::from_unchecked(out))
    }

    fn z_scores(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().map(|&x| normal_quantile_unchecked(clamp_p(x))).collect()
    }

    /// Runs `merge` on every node's support; singleton supports return the
    /// raw value untouched.
    fn per_node(&self, raw: &[f64], merge: impl Fn(&[usize]) -> f64) -> Vec<f64> {
        (0..self.dag.node_count())
            .map(|v| {
                let s = self.support_of(v);
                if s.len() == 1 {
                    raw[v]
                } else {
                    merge(s).clamp(0.0, 1.0)
                }
            })
            .collect()
    }

    fn order_statistic(&self, raw: &[f64], k: usize) -> Vec<f64> {
        self.per_node(raw, |s| {
            let m = s.len();
            let k = k.min(m);
            let mut vals: Vec<f64> = s.iter().map(|&c| raw[c]).collect();
            let (_, kth, _) = vals.select_nth_unstable_by(k - 1, f64::total_cmp);
            beta_cdf_int(*kth, k, m - k + 1)
        })
    }
}

#[inline]
fn conservative_tail(y: f64) -> f64 {
    if y >= 0.0 {
        1.0
    } else {
        std_normal_cdf(y)
    }
}

/// `((1/m) sum x^r)^(1/r)`.
fn power_mean(xs: impl Iterator<Item = f64>, r: f64) -> f64 {
    let (sum, m) = xs.fold((0.0, 0usize), |(s, m), x| (s + if r == 1.0 { x } else { x.powf(r) }, m + 1));
    let mean = sum / m as f64;
    if r == 1.0 {
        mean
    } else {
        mean.powf(1.0 / r)
    }
}

/// Smooths `p` on `dag` with `spec`.
pub fn smooth(dag: &Dag, p: &PValues, spec: &SmoothingSpec) -> Result<PValues> {
    Smoother::new(dag, spec.clone())?.apply(p)
}

pub fn smooth_fisher(dag: &Dag, p: &PValues) -> Result<PValues> {
    smooth(dag, p, &SmoothingSpec::fisher())
}

pub fn smooth_stouffer(dag: &Dag, p: &PValues) -> Result<PValues> {
    smooth(dag, p, &SmoothingSpec::Stouffer)
}

/// Order-statistic smoothing; `k = 1` is Tippett's minimum.
pub fn smooth_order(dag: &Dag, p: &PValues, k: usize) -> Result<PValues> {
    smooth(dag, p, &SmoothingSpec::Ruger { k })
}

pub fn smooth_generalized_mean(dag: &Dag, p: &PValues, r: f64, mc_samples: usize, seed: u64) -> Result<PValues> {
    smooth(dag, p, &SmoothingSpec::GeneralizedMean { r, mc_samples, seed })
}

pub fn smooth_conservative_stouffer(dag: &Dag, p: &PValues, support: Support) -> Result<PValues> {
    smooth(dag, p, &SmoothingSpec::ConservativeStouffer { support })
}
