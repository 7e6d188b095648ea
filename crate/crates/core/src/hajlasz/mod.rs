//! Hajłasz gradients and the norms defined as infima over them.
//!
//! The admissible gradients of `u` form the polyhedron
//! `{g >= 0 : g(x) + g(y) >= |u(x) - u(y)| / d(x,y)^s}`; the fractional
//! variant has one such family of constraints per annulus level. Norms are
//! computed by minimising the relevant (mixed) Lebesgue norm over it.

mod fractional;
mod gradient;
mod solve;

use serde::{Deserialize, Serialize};

pub use fractional::{besov_norm, triebel_lizorkin_norm, SequenceNorm};
pub use gradient::{
    annulus_level, canonical_fractional_gradient, canonical_gradient, is_fractional_gradient, is_hajlasz_gradient,
    level_constraints, pair_constraints, realized_range, GradientCandidate, GradientCheck, GradientSequence,
    PairConstraint,
};
pub use solve::{full_hajlasz_norm, hajlasz_norm, minimal_gradient, optimal_gradient, GradientSolution};

use crate::solver::SolverStatus;

/// How a computed value relates to the exact infimum or ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Exact,
    Upper,
    Lower,
    Unknown,
}

impl Bound {
    /// Semantics of `a / b` given the semantics of `a` and `b`.
    pub fn ratio(num: Bound, den: Bound) -> Bound {
        use Bound::*;
        match (num, den) {
            (Exact, Exact) => Exact,
            (Upper, Exact) | (Exact, Lower) | (Upper, Lower) => Upper,
            (Lower, Exact) | (Exact, Upper) | (Lower, Upper) => Lower,
            _ => Unknown,
        }
    }

    /// Semantics of a maximum over values with the given semantics.
    pub fn max_of(a: Bound, b: Bound) -> Bound {
        use Bound::*;
        match (a, b) {
            (x, y) if x == y => x,
            (Exact, Upper) | (Upper, Exact) => Upper,
            (Exact, Lower) | (Lower, Exact) => Lower,
            _ => Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub bound: Bound,
    pub status: SolverStatus,
    pub flags: Vec<String>,
}

pub const FLAG_NONCONVEX: &str = "nonconvex_upper_bound";
pub const FLAG_CANONICAL: &str = "canonical_upper_bound";
pub const FLAG_ITERATION_LIMIT: &str = "iteration_limit";
