// SPDX-License-Identifier: Apache-2.0
//! Multiple testing on directed acyclic graphs of logically nested
//! hypotheses.
//!
//! Raw node p-values are first *smoothed*: each node's p-value is merged with
//! those of its descendants (Fisher, Stouffer, order statistics, generalized
//! means, or a dependence-robust conservative Stouffer) and mapped back
//! through the exact null CDF of the merged statistic. The smoothed values
//! then feed a selection procedure that respects the graph:
//!
//! * [`selection::select_fwer_mg`]: all-parents sequential rejection (FWER),
//! * [`selection::select_fdx`]: the same followed by a topological top-up (FDX),
//! * [`selection::select_fdr_dagger`]: depth-wise generalized step-up (FDR),
//! * [`selection::select_bh`]: the structureless Benjamini–Hochberg baseline.
//!
//! [`simulation`] generates graphs, ground truths and p-values and runs
//! benchmark grids; [`validation`] checks the error guarantees empirically.

pub mod error;
pub mod graph;
pub mod io;
pub mod null_dist;
pub mod pvalues;
pub mod rng;
pub mod selection;
pub mod simulation;
pub mod smoothing;
pub mod validation;

pub use error::{Error, Result};
pub use graph::{Dag, Truth};
pub use pvalues::PValues;
pub use selection::{Method, SelectionResult};
pub use smoothing::{smooth, Smoother, SmoothingSpec, Support};

/// Library version, stamped into every result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
