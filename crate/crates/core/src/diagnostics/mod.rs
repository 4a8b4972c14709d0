//! Effective sample sizes, tree functionals, goodness-of-fit helpers and
//! comparison reports.

mod ess;
mod report;
pub mod stats;

pub use ess::{ess, EssEstimate, MIN_SAMPLES};
pub use report::{
    compare_report, event_counts, summarize_trace, FunctionalSummary, MethodSummary, NamedFunctional, SummaryReport,
};

use crate::real::Real;

/// Default number of grid samples used to discretize a path for ESS.
pub const DEFAULT_GRID: usize = 10_000;

/// Tree height: the sum of the `leaves - 1` holding times.
pub fn tree_height<R: Real>(coords: &[R], leaves: usize) -> f64 {
    coords[..leaves - 1].iter().map(|t| t.as_f64()).sum()
}
