//! Empirical constants for the Poincaré inequalities, the gradient
//! transfers of the discrete maximal function, the norm bounds and the
//! vector-valued maximal inequality.
//!
//! Every check returns the smallest constant for which the inequality holds
//! on the tested data, with a witness that reproduces it.

mod bounds;
mod fs;
mod poincare;
mod report;
mod suite;
mod transfer;

pub use bounds::{boundedness_experiment, BoundedRow, Boundedness, BoundsTable};
pub use fs::{fefferman_stein_check, maximal_levels};
pub use poincare::{
    check_fractional_poincare, check_poincare, check_sobolev_poincare, fractional_poincare_terms, min_deviation,
    poincare_terms, sobolev_poincare_terms, FractionalVariant,
};
pub use report::{VerificationReport, Witness};
pub use suite::{
    bounds_parameters, contexts, power_of_two_radii, random_sequences, run_all, run_suite, Suite, SuiteConfig,
    SuiteOutput, FS_EXPONENTS, TRANSFER_PAIRS,
};
pub use transfer::{
    gradient_transfer, sequence_transfer, transfer_ratio, GradientTransfer, SequenceTransfer, TransferBranch,
};

use crate::error::Result;
use crate::maximal::{standard_radii, ScaleFamily};
use crate::space::{MetricMeasureSpace, ScalePolicy};

/// A space with everything the checks derive from it once: the dimension
/// estimate `Q`, the radius set of the standard maximal operator and the
/// scale family of the discrete one.
#[derive(Clone, Debug)]
pub struct SpaceContext {
    pub id: String,
    pub space: MetricMeasureSpace,
    pub q_dim: f64,
    pub radii: Vec<f64>,
    pub family: ScaleFamily,
}

impl SpaceContext {
    pub fn new(id: impl Into<String>, space: MetricMeasureSpace, policy: ScalePolicy) -> Result<Self> {
        Self::with_cap(id, space, policy, None)
    }

    /// As [`new`](Self::new) with both maximal operators capped at scale
    /// `r_max` instead of the diameter.
    pub fn with_cap(
        id: impl Into<String>,
        space: MetricMeasureSpace,
        policy: ScalePolicy,
        r_max: Option<f64>,
    ) -> Result<Self> {
        let q_dim = space.geometry_constants(policy)?.q;
        let radii = standard_radii(&space, policy, r_max);
        let family = ScaleFamily::from_policy(&space, policy, r_max)?;
        Ok(Self {
            id: id.into(),
            space,
            q_dim,
            radii,
            family,
        })
    }
}

/// A function on a contextualised space.
#[derive(Clone, Copy, Debug)]
pub struct Instance<'a> {
    pub ctx: &'a SpaceContext,
    pub function: &'a str,
    pub u: &'a [f64],
}

/// Numerical zero for differences of computed maximal functions: values
/// built from averages of a constant agree only up to rounding.
pub(crate) fn noise_floor(values: &[f64]) -> f64 {
    1e-12 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
