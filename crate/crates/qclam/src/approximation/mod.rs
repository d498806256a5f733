//! Smooth approximation of functions on a lamination.
//!
//! A holomorphic motion over the unit disk is first localized to
//! `D(0, r)`, which bounds its fiber dilatation by `kappa = 2r / (1 + r^2)`.
//! The Beltrami coefficients of its holonomies are expanded in `z`, each
//! coefficient is mollified in the fiber, and the expansion is resummed into
//! a new holomorphic motion whose leaves are smooth. A function constant
//! along the original leaves is then transported to the new leaves.

mod expansion;
mod mollified;
mod pipeline;
mod trace;

pub use expansion::{HolomorphicExpansion, FIBERS};
pub use mollified::{mollified_lamination, MollifiedLamination, MAX_TERMS};
pub use pipeline::{run_pipeline, ApproxConfig, MotionChoice, PipelineReport, PipelineRun};
pub use trace::{
    approximate, projection_trace, transversal_dilatation, ApproxTable, Approximant, DilatationReport, NuSummary,
    ProjectionTrace, Transversal, W1pError, FLAG_BELOW,
};
pub use trace::w1p_error;

use crate::error::Result;
use crate::motion::HolomorphicMotion;

/// `phi_alpha(r z)`, with its dilatation bound.
#[derive(Clone, Debug)]
pub struct Localized {
    pub motion: HolomorphicMotion,
    pub radius: f64,
    pub kappa: f64,
}

/// Restricts a motion to `D(0, r)` and rescales back to the unit disk. By
/// the Schwarz-type bound the fiber dilatation is at most `2r / (1 + r^2)`.
pub fn localize(m: &HolomorphicMotion, r: f64) -> Result<Localized> {
    let motion = m.rescale_base(r)?;
    Ok(Localized { motion, radius: r, kappa: kappa_of_radius(r) })
}

pub fn kappa_of_radius(r: f64) -> f64 {
    2.0 * r / (1.0 + r * r)
}
