//! Shape-constrained ℓ₂ projections.
//!
//! * [`grenander`] / [`project_monotone_block`]: projection onto non-increasing
//!   sequences (PAVA), cross-checked against the least concave majorant of the
//!   cumulative sum diagram.
//! * [`convex_lse`]: projection onto convex sequences by support reduction over
//!   a hinge basis, verified through the `H_q ≥ H_v` characterization.
//! * [`project_convex_block`] / [`project_convex_partial`]: primal active-set
//!   projection onto `{q : ∇²q(j) ≥ 0, j ∈ C}` for a chosen constraint set `C`.

mod convex;
mod monotone;

pub use convex::{
    check_convex_lse_characterization, convex_lse, h_transform, project_convex_block,
    project_convex_partial,
};
pub use monotone::{grenander, lcm_left_slopes, project_monotone_block, CumSumDiagram};

use serde::{Deserialize, Serialize};

use crate::pmf::IndexSet;

/// Differences above this mark a knot of a fitted vector.
pub const KNOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub fitted: Vec<f64>,
    /// `‖fitted - input‖₂`.
    pub objective: f64,
    /// Offsets `j` (from the first point) where `∇^k fitted(j) > KNOT_TOL`.
    pub knots: IndexSet,
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn knots_of(fitted: &[f64], k: usize) -> IndexSet {
    match crate::pmf::forward_difference(fitted, k) {
        Ok(d) => IndexSet::from_offsets(
            0,
            d.iter().enumerate().filter(|(_, &x)| x > KNOT_TOL).map(|(i, _)| i),
        ),
        Err(_) => IndexSet::empty(0),
    }
}
