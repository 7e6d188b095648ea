use serde::{Deserialize, Serialize};

use super::gradient::{pair_constraints, GradientCandidate, PairConstraint};
use super::{Bound, NormValue, FLAG_ITERATION_LIMIT, FLAG_NONCONVEX};
use crate::error::{Error, Result};
use crate::norms::lp_norm;
use crate::solver::barrier::{self, BarrierOptions, PowerSum};
use crate::solver::lp::{solve_lp, tie_break};
use crate::solver::{Row, SolverStatus};
use crate::space::MetricMeasureSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSolution {
    /// Minimiser on all points (zero where no constraint applies).
    pub g: Vec<f64>,
    pub norm: NormValue,
}

/// Points touched by at least one constraint, and the inverse map.
pub(crate) fn active_points(n: usize, pairs: &[PairConstraint]) -> (Vec<usize>, Vec<Option<usize>>) {
    let mut slot = vec![None; n];
    for pc in pairs {
        slot[pc.x] = Some(0);
        slot[pc.y] = Some(0);
    }
    let mut active = Vec::new();
    for (x, s) in slot.iter_mut().enumerate() {
        if s.is_some() {
            *s = Some(active.len());
            active.push(x);
        }
    }
    (active, slot)
}

pub(crate) fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0) {
        return Err(Error::param(format!("{name} must be positive, got {p}")));
    }
    Ok(())
}

/// Minimise `‖g‖_{L^p(w)}` subject to `g(x) + g(y) >= c` for the given pairs.
///
/// `p = 1` and `p = ∞` are linear programs with a least-squares tie-break;
/// `1 < p < ∞` uses the barrier method on `Σ w g^p`; `0 < p < 1` returns
/// the best locally improved candidate as an upper bound.
pub fn minimal_gradient(weights: &[f64], pairs: &[PairConstraint], p: f64) -> Result<GradientSolution> {
    check_exponent("p", p)?;
    let n = weights.len();
    let (active, slot) = active_points(n, pairs);
    let m = active.len();
    if m == 0 {
        return Ok(GradientSolution {
            g: vec![0.0; n],
            norm: NormValue {
                value: 0.0,
                bound: Bound::Exact,
                status: SolverStatus::Trivial,
                flags: Vec::new(),
            },
        });
    }
    let w: Vec<f64> = active.iter().map(|&x| weights[x]).collect();
    let rows: Vec<Row> = pairs
        .iter()
        .map(|pc| Row::pair(slot[pc.x].unwrap(), slot[pc.y].unwrap(), pc.c))
        .collect();
    let mut canonical = vec![0.0; m];
    for (row, pc) in rows.iter().zip(pairs) {
        for &(j, _) in &row.terms {
            canonical[j] = f64::max(canonical[j], pc.c);
        }
    }
    let scatter = |z: &[f64]| {
        let mut g = vec![0.0; n];
        for (j, &x) in active.iter().enumerate() {
            g[x] = z[j];
        }
        g
    };
    let mut flags = Vec::new();

    let (z, value, bound, status) = if p == 1.0 {
        let lp = solve_lp(&w, &rows)?;
        let z = tie_break(&w, &rows, &lp, &w, &vec![1.0; m]);
        (z, lp.value, Bound::Exact, lp.status)
    } else if p.is_infinite() {
        // variables g_0..g_{m-1}, τ; minimise τ with τ >= g_j
        let mut cost = vec![0.0; m + 1];
        cost[m] = 1.0;
        let mut all = rows.clone();
        all.extend((0..m).map(|j| Row::new(vec![(m, 1.0), (j, -1.0)], 0.0)));
        let lp = solve_lp(&cost, &all)?;
        let mut tie = w.clone();
        tie.push(0.0);
        let mut dir = vec![1.0; m];
        dir.push(2.0);
        let mut z = tie_break(&cost, &all, &lp, &tie, &dir);
        z.truncate(m);
        (z, lp.value, Bound::Exact, lp.status)
    } else if p > 1.0 {
        let top = canonical.iter().copied().fold(0.0, f64::max);
        let z0: Vec<f64> = canonical.iter().map(|v| v + 0.1 * top).collect();
        let sol = barrier::minimize(&PowerSum { weights: &w, p }, &rows, z0, BarrierOptions::default())?;
        if sol.status == SolverStatus::IterationLimit {
            flags.push(FLAG_ITERATION_LIMIT.to_owned());
        }
        let bound = if sol.status == SolverStatus::Converged {
            Bound::Exact
        } else {
            Bound::Upper
        };
        (sol.z, sol.value.powf(1.0 / p), bound, sol.status)
    } else {
        let z = local_search(&w, &rows, &canonical, p);
        let value = lp_norm(&z, &w, p);
        flags.push(FLAG_NONCONVEX.to_owned());
        (z, value, Bound::Upper, SolverStatus::Heuristic)
    };
    Ok(GradientSolution {
        g: scatter(&z),
        norm: NormValue {
            value,
            bound,
            status,
            flags,
        },
    })
}

/// Lower each coordinate in turn to the least feasible value given the
/// others, until nothing moves.
fn coordinate_descent(rows: &[Row], adjacency: &[Vec<usize>], mut z: Vec<f64>) -> Vec<f64> {
    for _ in 0..1000 {
        let mut moved = false;
        for j in 0..z.len() {
            let need = adjacency[j]
                .iter()
                .map(|&r| {
                    let row = &rows[r];
                    let other = row.terms.iter().find(|&&(k, _)| k != j).map_or(0.0, |&(k, _)| z[k]);
                    row.rhs - other
                })
                .fold(0.0, f64::max);
            if need < z[j] {
                z[j] = need;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    z
}

/// Best of several feasible starts after coordinate descent, under the
/// `L^p` quasi-norm.
fn local_search(w: &[f64], rows: &[Row], canonical: &[f64], p: f64) -> Vec<f64> {
    let mut adjacency = vec![Vec::new(); canonical.len()];
    for (r, row) in rows.iter().enumerate() {
        for &(j, _) in &row.terms {
            adjacency[j].push(r);
        }
    }
    let mut starts = vec![canonical.to_vec(), canonical.iter().map(|v| 0.5 * v).collect()];
    if let Ok(lp) = solve_lp(w, rows) {
        starts.push(lp.z);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let z = coordinate_descent(rows, &adjacency, start);
        let v = lp_norm(&z, w, p);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, z));
        }
    }
    best.expect("at least one start").1
}

/// Minimal `s`-Hajłasz gradient of `u` in `L^p` and its norm.
pub fn optimal_gradient(
    space: &MetricMeasureSpace,
    u: &[f64],
    s: f64,
    p: f64,
) -> Result<(GradientCandidate, NormValue)> {
    if !(s >= 0.0) {
        return Err(Error::param(format!("s must be >= 0, got {s}")));
    }
    let pairs = pair_constraints(space, u, s);
    let sol = minimal_gradient(space.weights(), &pairs, p)?;
    Ok((GradientCandidate { g: sol.g, s }, sol.norm))
}

/// Homogeneous norm `inf_g ‖g‖_{L^p}`.
pub fn hajlasz_norm(space: &MetricMeasureSpace, u: &[f64], s: f64, p: f64) -> Result<NormValue> {
    optimal_gradient(space, u, s, p).map(|(_, norm)| norm)
}

/// `‖u‖_{L^p} + inf_g ‖g‖_{L^p}`.
pub fn full_hajlasz_norm(space: &MetricMeasureSpace, u: &[f64], s: f64, p: f64) -> Result<NormValue> {
    let mut norm = hajlasz_norm(space, u, s, p)?;
    norm.value += lp_norm(u, space.weights(), p);
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hajlasz::canonical_gradient;
    use crate::space::{default_labels, Metric};

    fn canonical_norm(space: &MetricMeasureSpace, u: &[f64], s: f64, p: f64) -> f64 {
        lp_norm(&canonical_gradient(space, u, s).g, space.weights(), p)
    }

    fn two_point() -> MetricMeasureSpace {
        MetricMeasureSpace::from_matrix_unit(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn line(n: usize) -> MetricMeasureSpace {
        MetricMeasureSpace::from_coords(
            default_labels(n),
            (0..n).map(|i| vec![i as f64]).collect(),
            Metric::Euclidean,
            vec![1.0; n],
        )
        .unwrap()
    }

    #[test]
    fn two_point_examples() {
        let t = two_point();
        let (g, norm) = optimal_gradient(&t, &[0.0, 1.0], 1.0, 1.0).unwrap();
        assert!((norm.value - 1.0).abs() < 1e-12);
        assert!((g.g[0] - 0.5).abs() < 1e-6 && (g.g[1] - 0.5).abs() < 1e-6, "{:?}", g.g);
        let (g, norm) = optimal_gradient(&t, &[0.0, 1.0], 1.0, f64::INFINITY).unwrap();
        assert!((norm.value - 0.5).abs() < 1e-12);
        assert!((g.g[0] - 0.5).abs() < 1e-6 && (g.g[1] - 0.5).abs() < 1e-6);
        let (_, norm) = optimal_gradient(&t, &[0.0, 1.0], 1.0, 2.0).unwrap();
        assert!((norm.value - 0.5f64.sqrt()).abs() < 1e-9);
        let full = full_hajlasz_norm(&t, &[0.0, 1.0], 1.0, 1.0).unwrap();
        assert!((full.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_function() {
        let l = line(6);
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            let (g, norm) = optimal_gradient(&l, &[4.0; 6], 0.5, p).unwrap();
            assert_eq!(norm.value, 0.0);
            assert!(g.g.iter().all(|&v| v == 0.0));
        }
        let full = full_hajlasz_norm(&l, &[2.0; 6], 1.0, 2.0).unwrap();
        assert!((full.value - lp_norm(&[2.0; 6], &[1.0; 6], 2.0)).abs() < 1e-12);
    }

    #[test]
    fn optimal_below_canonical_and_feasible() {
        let l = line(9);
        let u: Vec<f64> = (0..9).map(|i| ((i as f64) * 0.9).sin()).collect();
        for p in [0.5, 1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let (g, norm) = optimal_gradient(&l, &u, 0.6, p).unwrap();
            let check = super::super::is_hajlasz_gradient(&l, &u, &g.g, 0.6, 1e-8);
            assert!(check.ok, "p={p} violation {}", check.worst_violation);
            assert!(norm.value <= canonical_norm(&l, &u, 0.6, p) * (1.0 + 1e-9));
            assert_eq!(norm.bound == Bound::Upper, p < 1.0, "p={p} {norm:?}");
        }
    }

    #[test]
    fn homogeneous_in_u() {
        let l = line(7);
        let u: Vec<f64> = (0..7).map(|i| (i * i) as f64 * 0.1).collect();
        let cu: Vec<f64> = u.iter().map(|v| -3.0 * v).collect();
        for p in [1.0, 2.0, f64::INFINITY] {
            let a = hajlasz_norm(&l, &u, 1.0, p).unwrap().value;
            let b = hajlasz_norm(&l, &cu, 1.0, p).unwrap().value;
            assert!((b - 3.0 * a).abs() <= 1e-8 * b, "p={p}: {a} {b}");
        }
    }

    #[test]
    fn nonconvex_two_point_prefers_one_sided() {
        let t = two_point();
        let (_, norm) = optimal_gradient(&t, &[0.0, 1.0], 1.0, 0.5).unwrap();
        assert_eq!(norm.value, 1.0);
        assert_eq!(norm.flags, vec![FLAG_NONCONVEX.to_owned()]);
    }
}
