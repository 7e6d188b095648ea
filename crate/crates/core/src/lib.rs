//! Fractional maximal operators and Hajłasz-type smoothness on finite metric
//! measure spaces.
//!
//! The crate models a space as a finite point set with a metric and point
//! weights ([`space::MetricMeasureSpace`]), builds scale-`r` coverings with a
//! subordinate partition of unity ([`covering`]), evaluates the fractional
//! maximal function and its discrete counterpart ([`maximal`]), computes
//! Hajłasz, Besov and Triebel–Lizorkin norms as convex programs
//! ([`hajlasz`]), and measures the smallest constants in the pointwise and
//! norm inequalities relating them ([`verify`]).

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod covering;
pub mod error;
pub mod exec;
pub mod hajlasz;
pub mod maximal;
pub mod norms;
pub mod params;
pub mod solver;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use space::{Metric, MetricMeasureSpace, PointLabel, ScalePolicy};
