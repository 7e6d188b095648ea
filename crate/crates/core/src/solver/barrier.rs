use nalgebra::{DMatrix, DVector};

use super::{Row, SolverStatus};
use crate::error::{Error, Result};

/// Smooth convex objective on the open positive orthant.
pub trait Objective {
    fn value(&self, z: &[f64]) -> f64;
    /// Writes `∇f(z)` into `out` (same length as `z`).
    fn gradient(&self, z: &[f64], out: &mut [f64]);
    /// Adds `scale · ∇²f(z)` to `h`.
    fn add_hessian(&self, z: &[f64], scale: f64, h: &mut DMatrix<f64>);
}

/// Gap bound (relative) still reported as converged when the iteration
/// stalls at floating-point resolution.
const STALL_TOL: f64 = 1e-8;

/// Newton steps allowed for one centering.
const MAX_CENTERING: usize = 200;

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    /// Stop once the duality-gap bound is below `rel_tol · |f| + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Factor by which the barrier weight grows between centering steps.
    pub mu: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            mu: 16.0,
            max_newton: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BarrierSolution {
    pub z: Vec<f64>,
    pub value: f64,
    /// Upper bound on `f(z) - min f` at the last central point.
    pub gap: f64,
    pub newton_steps: usize,
    pub status: SolverStatus,
}

struct State<'a, O: ?Sized> {
    rows: &'a [Row],
    f: &'a O,
    dim: usize,
}

impl<O: Objective + ?Sized> State<'_, O> {
    fn slacks(&self, z: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.slack(z)).collect()
    }

    fn strictly_feasible(&self, z: &[f64], s: &[f64]) -> bool {
        z.iter().all(|&v| v > 0.0) && s.iter().all(|&v| v > 0.0)
    }

    /// Gradient and Hessian of `t f - Σ log s_i - Σ log z_j`.
    fn newton_system(&self, t: f64, z: &[f64], s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let mut g = vec![0.0; self.dim];
        self.f.gradient(z, &mut g);
        let mut grad = DVector::from_iterator(self.dim, g.into_iter().map(|v| t * v));
        let mut h = DMatrix::zeros(self.dim, self.dim);
        self.f.add_hessian(z, t, &mut h);
        for (row, &si) in self.rows.iter().zip(s) {
            let inv = 1.0 / si;
            let inv2 = inv * inv;
            for &(a, ca) in &row.terms {
                grad[a] -= ca * inv;
                for &(b, cb) in &row.terms {
                    h[(a, b)] += ca * cb * inv2;
                }
            }
        }
        for j in 0..self.dim {
            grad[j] -= 1.0 / z[j];
            h[(j, j)] += 1.0 / (z[j] * z[j]);
        }
        (grad, h)
    }
}

fn solve_spd(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = (0..h.nrows())
        .map(|i| h[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        if reg > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += reg;
            }
        }
        if let Some(chol) = m.cholesky() {
            let x = chol.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

/// Minimise `f` over `{z > 0 : rows hold}` starting from a strictly
/// feasible `z0`.
pub fn minimize<O: Objective + ?Sized>(
    f: &O,
    rows: &[Row],
    z0: Vec<f64>,
    opts: BarrierOptions,
) -> Result<BarrierSolution> {
    let dim = z0.len();
    let state = State { rows, f, dim };
    let mut z = z0;
    let mut s = state.slacks(&z);
    if !state.strictly_feasible(&z, &s) {
        return Err(Error::Solver("starting point is not strictly feasible".into()));
    }
    if dim == 0 {
        return Ok(BarrierSolution {
            value: f.value(&z),
            z,
            gap: 0.0,
            newton_steps: 0,
            status: SolverStatus::Trivial,
        });
    }
    let m = (rows.len() + dim) as f64;
    let f0 = f.value(&z);
    let mut t = if f0.abs() > 0.0 { m / f0.abs() } else { 1.0 };
    let mut steps = 0usize;
    let mut stalled = false;

    loop {
        let mut inner = 0usize;
        loop {
            if steps >= opts.max_newton {
                let value = f.value(&z);
                return Ok(BarrierSolution {
                    z,
                    value,
                    gap: m / t,
                    newton_steps: steps,
                    status: SolverStatus::IterationLimit,
                });
            }
            steps += 1;
            let (grad, h) = state.newton_system(t, &z, &s);
            let Some(dz) = solve_spd(h, &(-&grad)) else {
                return Err(Error::Solver("Newton system is singular".into()));
            };
            let decrement = -grad.dot(&dz);
            let fz = f.value(&z);
            // below this the decrement is lost in the rounding of t·f
            let resolution = 1e-10 + 1e-13 * t * fz.abs();
            if !(decrement > resolution) {
                break;
            }
            inner += 1;
            let ds: Vec<f64> = rows
                .iter()
                .map(|r| r.terms.iter().map(|&(j, c)| c * dz[j]).sum())
                .collect();
            let mut alpha_max = f64::INFINITY;
            for j in 0..dim {
                if dz[j] < 0.0 {
                    alpha_max = alpha_max.min(-z[j] / dz[j]);
                }
            }
            for (i, &d) in ds.iter().enumerate() {
                if d < 0.0 {
                    alpha_max = alpha_max.min(-s[i] / d);
                }
            }
            let mut alpha = (0.99 * alpha_max).min(1.0);
            // φ(z + α dz) - φ(z), with the log terms summed as log1p ratios
            let delta = |alpha: f64, znew: &[f64]| -> f64 {
                let mut d = t * (f.value(znew) - fz);
                for j in 0..dim {
                    d -= (alpha * dz[j] / z[j]).ln_1p();
                }
                for (i, &dsi) in ds.iter().enumerate() {
                    d -= (alpha * dsi / s[i]).ln_1p();
                }
                d
            };
            let mut accepted = false;
            for _ in 0..60 {
                let znew: Vec<f64> = (0..dim).map(|j| z[j] + alpha * dz[j]).collect();
                let snew = state.slacks(&znew);
                if state.strictly_feasible(&znew, &snew) {
                    let d = delta(alpha, &znew);
                    if d <= -0.25 * alpha * decrement || decrement < 1e-9 && d <= 1e-12 * t * fz.abs() {
                        // A step that leaves z unchanged means the Newton
                        // direction is below floating-point resolution.
                        accepted = znew != z;
                        z = znew;
                        s = snew;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted || inner > MAX_CENTERING {
                stalled = decrement > 1e3 * resolution;
                break;
            }
        }
        let gap = m / t;
        let value = f.value(&z);
        let done = gap <= opts.rel_tol * value.abs() + opts.abs_tol;
        if stalled && !done {
            let status = if gap <= STALL_TOL * value.abs() + opts.abs_tol {
                SolverStatus::Converged
            } else {
                SolverStatus::IterationLimit
            };
            return Ok(BarrierSolution {
                z,
                value,
                gap,
                newton_steps: steps,
                status,
            });
        }
        if done {
            return Ok(BarrierSolution {
                z,
                value,
                gap,
                newton_steps: steps,
                status: SolverStatus::Converged,
            });
        }
        t *= opts.mu;
    }
}

/// `Σ_j w_j z_j^p` for `p >= 1`.
pub struct PowerSum<'a> {
    pub weights: &'a [f64],
    pub p: f64,
}

impl Objective for PowerSum<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        z.iter().zip(self.weights).map(|(v, w)| w * v.powf(self.p)).sum()
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        for ((o, v), w) in out.iter_mut().zip(z).zip(self.weights) {
            *o = w * self.p * v.powf(self.p - 1.0);
        }
    }

    fn add_hessian(&self, z: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        if self.p == 1.0 {
            return;
        }
        for (j, (v, w)) in z.iter().zip(self.weights).enumerate() {
            h[(j, j)] += scale * w * self.p * (self.p - 1.0) * v.powf(self.p - 2.0);
        }
    }
}
