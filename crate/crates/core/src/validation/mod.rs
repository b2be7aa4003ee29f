// SPDX-License-Identifier: Apache-2.0
//! Empirical checks of the validity guarantees, and reference
//! implementations used to cross-check the selection code.

mod error_control;
mod prds;
pub mod reference;
mod superuniform;

pub use error_control::{assess, check_error_control, ErrorCell, ErrorControlReport, ErrorTarget};
pub use prds::{prds_diagnostic, prds_screen, random_upper_sets, PrdsReport, ProbeResult, UpperSet, MIN_PRDS_TRIALS};
pub use reference::{reference_equivalence, EquivalenceReport};
pub use superuniform::{
    check_superuniformity, SuperUniformCell, SuperUniformReport, DEFAULT_GRID, MIN_SUPERUNIFORM_TRIALS,
};
