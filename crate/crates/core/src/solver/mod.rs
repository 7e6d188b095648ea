//! Convex programs over polyhedra `{z >= 0 : a_i · z >= b_i}`.
//!
//! [`barrier`] is a primal log-barrier method for smooth convex objectives;
//! [`lp`] solves linear objectives exactly with a simplex backend and can
//! break ties among optimal vertices by a weighted least-squares criterion.

pub mod barrier;
pub mod lp;

use serde::{Deserialize, Serialize};

/// Sparse linear constraint `Σ coef · z[idx] >= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn new(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { terms, rhs }
    }

    /// `z[a] + z[b] >= rhs`.
    pub fn pair(a: usize, b: usize, rhs: f64) -> Self {
        Self::new(vec![(a, 1.0), (b, 1.0)], rhs)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * z[j]).sum()
    }

    pub fn slack(&self, z: &[f64]) -> f64 {
        self.eval(z) - self.rhs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    /// Nothing to optimise (no active constraints).
    Trivial,
    /// Simplex optimum.
    Optimal,
    /// Barrier method reached the requested duality-gap bound.
    Converged,
    /// Iteration budget exhausted; the last strictly feasible iterate is
    /// returned.
    IterationLimit,
    /// Local search without an optimality certificate.
    Heuristic,
}
