use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gradient::{canonical_fractional_gradient, level_constraints, realized_range, GradientSequence};
use super::solve::{check_exponent, minimal_gradient};
use super::{Bound, NormValue, FLAG_CANONICAL, FLAG_ITERATION_LIMIT};
use crate::error::{Error, Result};
use crate::exec;
use crate::norms::{lq_norm, mixed_norm, MixedKind};
use crate::solver::barrier::{self, BarrierOptions, Objective, PowerSum};
use crate::solver::lp::{solve_lp, tie_break};
use crate::solver::{Row, SolverStatus};
use crate::space::MetricMeasureSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceNorm {
    pub norm: NormValue,
    pub sequence: GradientSequence,
}

fn empty_sequence(space: &MetricMeasureSpace, s: f64) -> GradientSequence {
    match realized_range(space) {
        Some((lo, hi)) => GradientSequence::zeros(lo, hi, space.len(), s),
        None => GradientSequence::zeros(0, -1, space.len(), s),
    }
}

/// `inf ‖(g_k)‖_{ℓq(L^p)}`. The constraints of different levels are
/// disjoint and the objective is increasing in each `‖g_k‖_p`, so each
/// level is minimised on its own.
pub fn besov_norm(space: &MetricMeasureSpace, u: &[f64], s: f64, p: f64, q: f64) -> Result<SequenceNorm> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let mut sequence = empty_sequence(space, s);
    let by_level = level_constraints(space, u, s);
    let solved = exec::map_slice(&by_level, |(k, pairs)| {
        minimal_gradient(space.weights(), pairs, p).map(|sol| (*k, sol))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut bound = Bound::Exact;
    let mut status = SolverStatus::Trivial;
    let mut flags: Vec<String> = Vec::new();
    let mut level_norms = Vec::with_capacity(solved.len());
    for (k, sol) in solved {
        level_norms.push(sol.norm.value);
        bound = Bound::max_of(bound, sol.norm.bound);
        status = worse(status, sol.norm.status);
        for f in sol.norm.flags {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
        sequence.levels[(k - sequence.k_min) as usize] = sol.g;
    }
    Ok(SequenceNorm {
        norm: NormValue {
            value: lq_norm(level_norms, q),
            bound,
            status,
            flags,
        },
        sequence,
    })
}

fn worse(a: SolverStatus, b: SolverStatus) -> SolverStatus {
    use SolverStatus::*;
    let rank = |s| match s {
        Trivial => 0,
        Optimal => 1,
        Converged => 2,
        Heuristic => 3,
        IterationLimit => 4,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

/// `Σ_x w_x (Σ_{v ∈ G_x} z_v^q)^{p/q}` for `p, q >= 1`, `q < ∞`.
struct MixedPower<'a> {
    groups: &'a [Vec<usize>],
    weights: &'a [f64],
    p: f64,
    q: f64,
}

impl MixedPower<'_> {
    fn inner(&self, group: &[usize], z: &[f64]) -> f64 {
        group.iter().map(|&v| z[v].powf(self.q)).sum()
    }
}

impl Objective for MixedPower<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        self.groups
            .iter()
            .zip(self.weights)
            .map(|(g, w)| w * self.inner(g, z).powf(self.p / self.q))
            .sum()
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let r = self.p / self.q;
        for (g, w) in self.groups.iter().zip(self.weights) {
            let sr = self.inner(g, z).powf(r - 1.0);
            for &v in g {
                out[v] += w * self.p * sr * z[v].powf(self.q - 1.0);
            }
        }
    }

    fn add_hessian(&self, z: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        let (p, q) = (self.p, self.q);
        let r = p / q;
        for (g, w) in self.groups.iter().zip(self.weights) {
            let sum = self.inner(g, z);
            let outer = scale * w * p * (p - q) * sum.powf(r - 2.0);
            let diag = scale * w * p * (q - 1.0) * sum.powf(r - 1.0);
            for &a in g {
                let za = z[a].powf(q - 1.0);
                for &b in g {
                    h[(a, b)] += outer * za * z[b].powf(q - 1.0);
                }
                if q != 1.0 {
                    h[(a, a)] += diag * z[a].powf(q - 2.0);
                }
            }
        }
    }
}

/// `inf ‖(g_k)‖_{L^p(ℓq)}`, solved jointly over all levels for `p, q >= 1`.
///
/// Supported exactly: `1 <= p < ∞` with any `q >= 1` including `∞`, and
/// `p = ∞` with `q ∈ {1, ∞}`. With `min(p, q) < 1` the canonical sequence is
/// returned as a flagged upper bound.
pub fn triebel_lizorkin_norm(space: &MetricMeasureSpace, u: &[f64], s: f64, p: f64, q: f64) -> Result<SequenceNorm> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let n = space.len();
    let weights = space.weights();
    if p < 1.0 || q < 1.0 {
        let sequence = canonical_fractional_gradient(space, u, s);
        let value = mixed_norm(&sequence.levels, weights, p, q, MixedKind::LpLq);
        return Ok(SequenceNorm {
            norm: NormValue {
                value,
                bound: Bound::Upper,
                status: SolverStatus::Heuristic,
                flags: vec![FLAG_CANONICAL.to_owned()],
            },
            sequence,
        });
    }
    if p.is_infinite() && !(q == 1.0 || q.is_infinite()) {
        return Err(Error::param("p = ∞ is supported only with q = 1 or q = ∞"));
    }

    let mut sequence = empty_sequence(space, s);
    let by_level = level_constraints(space, u, s);
    // one variable per (level, point) that appears in some constraint
    let mut var_of: Vec<Vec<Option<usize>>> = vec![vec![None; n]; sequence.levels.len()];
    let mut vars: Vec<(usize, usize)> = Vec::new();
    let mut start: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    for (k, pairs) in &by_level {
        let li = (k - sequence.k_min) as usize;
        for pc in pairs {
            for x in [pc.x, pc.y] {
                if var_of[li][x].is_none() {
                    var_of[li][x] = Some(vars.len());
                    vars.push((li, x));
                    start.push(0.0);
                }
            }
            let (a, b) = (var_of[li][pc.x].unwrap(), var_of[li][pc.y].unwrap());
            start[a] = f64::max(start[a], pc.c);
            start[b] = f64::max(start[b], pc.c);
            rows.push(Row::pair(a, b, pc.c));
        }
    }
    let m = vars.len();
    if m == 0 {
        return Ok(SequenceNorm {
            norm: NormValue {
                value: 0.0,
                bound: Bound::Exact,
                status: SolverStatus::Trivial,
                flags: Vec::new(),
            },
            sequence,
        });
    }
    // level variables grouped by point, points in index order
    let mut groups_by_point: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, &(_, x)) in vars.iter().enumerate() {
        groups_by_point[x].push(v);
    }
    let points: Vec<usize> = (0..n).filter(|&x| !groups_by_point[x].is_empty()).collect();
    let groups: Vec<Vec<usize>> = points.iter().map(|&x| groups_by_point[x].clone()).collect();
    let gw: Vec<f64> = points.iter().map(|&x| weights[x]).collect();
    let top = start.iter().copied().fold(0.0, f64::max);
    let delta = 0.1 * top;

    let mut flags = Vec::new();
    let (z, status, bound) = if q.is_infinite() || p.is_infinite() {
        // epigraph variables: G_x >= g_{k,x} (q = ∞) or G_x >= Σ_k g_{k,x} (q = 1)
        let e0 = m;
        let e_count = if q.is_infinite() { groups.len() } else { 0 };
        let mut all = rows.clone();
        let mut z0: Vec<f64> = start.iter().map(|v| v + delta).collect();
        if q.is_infinite() {
            for (gi, g) in groups.iter().enumerate() {
                for &v in g {
                    all.push(Row::new(vec![(e0 + gi, 1.0), (v, -1.0)], 0.0));
                }
                z0.push(g.iter().map(|&v| z0[v]).fold(0.0, f64::max) + delta);
            }
        }
        let total = m + e_count;
        if p.is_infinite() {
            // τ >= G_x (q = ∞) or τ >= Σ_k g_{k,x} (q = 1)
            let tau = total;
            if q.is_infinite() {
                for gi in 0..groups.len() {
                    all.push(Row::new(vec![(tau, 1.0), (e0 + gi, -1.0)], 0.0));
                }
            } else {
                for g in &groups {
                    let mut terms = vec![(tau, 1.0)];
                    terms.extend(g.iter().map(|&v| (v, -1.0)));
                    all.push(Row::new(terms, 0.0));
                }
            }
            let mut cost = vec![0.0; total + 1];
            cost[tau] = 1.0;
            let lp = solve_lp(&cost, &all)?;
            let mut tie = vec![1.0; total];
            tie.push(0.0);
            let widest = groups.iter().map(Vec::len).max().unwrap_or(1) as f64;
            let mut dir = vec![1.0; m];
            dir.extend(std::iter::repeat_n(2.0, e_count));
            dir.push(widest + 3.0);
            let z = tie_break(&cost, &all, &lp, &tie, &dir);
            (z, SolverStatus::Optimal, Bound::Exact)
        } else if p == 1.0 {
            let mut cost = vec![0.0; m];
            cost.extend(gw.iter().copied());
            let lp = solve_lp(&cost, &all)?;
            let mut dir = vec![1.0; m];
            dir.extend(std::iter::repeat_n(2.0, e_count));
            let z = tie_break(&cost, &all, &lp, &vec![1.0; total], &dir);
            (z, SolverStatus::Optimal, Bound::Exact)
        } else {
            let mut ew = vec![0.0; m];
            ew.extend(gw.iter().copied());
            let sol = barrier::minimize(&PowerSum { weights: &ew, p }, &all, z0, BarrierOptions::default())?;
            let bound = barrier_bound(sol.status, &mut flags);
            (sol.z, sol.status, bound)
        }
    } else if p == 1.0 && q == 1.0 {
        let cost: Vec<f64> = vars.iter().map(|&(_, x)| weights[x]).collect();
        let lp = solve_lp(&cost, &rows)?;
        let z = tie_break(&cost, &rows, &lp, &cost, &vec![1.0; m]);
        (z, SolverStatus::Optimal, Bound::Exact)
    } else {
        let z0: Vec<f64> = start.iter().map(|v| v + delta).collect();
        let sol = if p == q {
            let vw: Vec<f64> = vars.iter().map(|&(_, x)| weights[x]).collect();
            barrier::minimize(&PowerSum { weights: &vw, p }, &rows, z0, BarrierOptions::default())?
        } else {
            let f = MixedPower {
                groups: &groups,
                weights: &gw,
                p,
                q,
            };
            barrier::minimize(&f, &rows, z0, BarrierOptions::default())?
        };
        let bound = barrier_bound(sol.status, &mut flags);
        (sol.z, sol.status, bound)
    };
    for (v, &(li, x)) in vars.iter().enumerate() {
        sequence.levels[li][x] = z[v];
    }
    let value = mixed_norm(&sequence.levels, weights, p, q, MixedKind::LpLq);
    Ok(SequenceNorm {
        norm: NormValue {
            value,
            bound,
            status,
            flags,
        },
        sequence,
    })
}

fn barrier_bound(status: SolverStatus, flags: &mut Vec<String>) -> Bound {
    if status == SolverStatus::Converged {
        Bound::Exact
    } else {
        flags.push(FLAG_ITERATION_LIMIT.to_owned());
        Bound::Upper
    }
}
