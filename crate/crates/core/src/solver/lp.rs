use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::barrier::{minimize, BarrierOptions, Objective};
use super::{Row, SolverStatus};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub z: Vec<f64>,
    pub value: f64,
    pub status: SolverStatus,
}

/// `min cost · z` over `{z >= 0 : rows hold}`.
pub fn solve_lp(cost: &[f64], rows: &[Row]) -> Result<LpSolution> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = cost.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect();
    for row in rows {
        let expr: Vec<_> = row.terms.iter().map(|&(j, c)| (vars[j], c)).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Ge, row.rhs);
    }
    let solution = problem.solve().map_err(|e| Error::Solver(format!("simplex: {e}")))?;
    let z: Vec<f64> = vars.iter().map(|&v| solution[v].max(0.0)).collect();
    let value = cost.iter().zip(&z).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        z,
        value,
        status: SolverStatus::Optimal,
    })
}

/// `c · z + ε Σ w_j z_j²`.
struct Regularized<'a> {
    cost: &'a [f64],
    weights: &'a [f64],
    eps: f64,
}

impl Objective for Regularized<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.cost)
            .zip(self.weights)
            .map(|((v, c), w)| c * v + self.eps * w * v * v)
            .sum()
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        for (((o, v), c), w) in out.iter_mut().zip(z).zip(self.cost).zip(self.weights) {
            *o = c + 2.0 * self.eps * w * v;
        }
    }

    fn add_hessian(&self, _z: &[f64], scale: f64, h: &mut nalgebra::DMatrix<f64>) {
        for (j, w) in self.weights.iter().enumerate() {
            h[(j, j)] += 2.0 * scale * self.eps * w;
        }
    }
}

/// Relative loss in the linear objective tolerated by the tie-break.
pub const TIE_SLACK: f64 = 1e-8;

/// Among optimal points of the linear program, pick (approximately) the one
/// minimising `Σ tie_weights_j z_j²`.
///
/// Solves `min c·z + ε Σ w z²`, which for small enough `ε` is exactly the
/// least-squares optimal point; `ε` is chosen so that the linear objective
/// rises by at most `TIE_SLACK` relative to the optimum. `direction` must
/// satisfy `direction > 0` and `a_i · direction > 0` for every row; it moves
/// the simplex vertex into the interior. Falls back to the vertex when the
/// optimum is zero or the barrier fails.
pub fn tie_break(cost: &[f64], rows: &[Row], optimum: &LpSolution, tie_weights: &[f64], direction: &[f64]) -> Vec<f64> {
    let spread: f64 = optimum.z.iter().zip(tie_weights).map(|(v, w)| w * v * v).sum();
    if !(optimum.value > 0.0 && spread > 0.0) {
        return optimum.z.clone();
    }
    let eps = TIE_SLACK * optimum.value / spread;
    let rise: f64 = direction.iter().map(|d| d.abs()).sum::<f64>().max(1.0);
    let scale = optimum.z.iter().copied().fold(0.0, f64::max);
    let shift = 1e-3 * scale / rise;
    let start: Vec<f64> = optimum.z.iter().zip(direction).map(|(v, d)| v + shift * d).collect();
    let f = Regularized {
        cost,
        weights: tie_weights,
        eps,
    };
    match minimize(&f, rows, start, BarrierOptions::default()) {
        Ok(sol) => sol.z,
        Err(_) => optimum.z.clone(),
    }
}
