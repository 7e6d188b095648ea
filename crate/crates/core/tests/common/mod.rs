#![allow(dead_code)]

use fracmax::corpus::{Corpus, CorpusSpec};
use fracmax::{Metric, MetricMeasureSpace};
use nalgebra::{DMatrix, DVector};

pub fn corpus(name: &str) -> Corpus {
    Corpus::generate(&CorpusSpec::builtin(name).unwrap()).unwrap()
}

pub fn line(n: usize) -> MetricMeasureSpace {
    MetricMeasureSpace::from_coords(
        fracmax::space::default_labels(n),
        (0..n).map(|i| vec![i as f64]).collect(),
        Metric::Euclidean,
        vec![1.0; n],
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// `{y : d(x,y) <= r}` by direct scan.
pub fn scan_ball(space: &MetricMeasureSpace, x: usize, r: f64, closed: bool) -> Vec<usize> {
    (0..space.len())
        .filter(|&y| {
            let d = space.dist(x, y);
            if closed {
                d <= r
            } else {
                d < r
            }
        })
        .collect()
}

pub fn scan_average(space: &MetricMeasureSpace, f: impl Fn(usize) -> f64, ball: &[usize]) -> f64 {
    let w = space.weights();
    let num: f64 = ball.iter().map(|&y| f(y) * w[y]).sum();
    let den: f64 = ball.iter().map(|&y| w[y]).sum();
    num / den
}

/// `max_r r^α ⨍_{B̄(x,r)} |u|` by direct scan.
pub fn scan_maximal(space: &MetricMeasureSpace, u: &[f64], alpha: f64, radii: &[f64]) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            radii
                .iter()
                .map(|&r| {
                    let mut ball = scan_ball(space, x, r, true);
                    if ball.is_empty() {
                        ball.push(x);
                    }
                    r.powf(alpha) * scan_average(space, |y| u[y].abs(), &ball)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Pairwise constraint matrix `c[x][y] = |u(x)-u(y)| / d^s`, zero diagonal.
pub fn constraint_matrix(space: &MetricMeasureSpace, u: &[f64], s: f64) -> Vec<Vec<f64>> {
    let n = space.len();
    (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        0.0
                    } else {
                        (u[x] - u[y]).abs() / space.dist(x, y).powf(s)
                    }
                })
                .collect()
        })
        .collect()
}

/// Maximum of `Σ_x c[x][σ(x)]` over all permutations `σ`, by dynamic
/// programming over subsets of used columns.
pub fn max_assignment(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let mut best = vec![f64::NEG_INFINITY; 1 << n];
    best[0] = 0.0;
    for mask in 0usize..(1 << n) {
        let row = mask.count_ones() as usize;
        if row >= n || best[mask] == f64::NEG_INFINITY {
            continue;
        }
        for col in 0..n {
            if mask & (1 << col) == 0 {
                let next = mask | (1 << col);
                best[next] = best[next].max(best[mask] + c[row][col]);
            }
        }
    }
    best[(1 << n) - 1]
}

/// Minimal `L^1` norm of an `s`-gradient for uniform weights `w`: by LP
/// duality it equals the best symmetric fractional b-matching, which is
/// half the best assignment.
pub fn l1_gradient_oracle(space: &MetricMeasureSpace, u: &[f64], s: f64) -> f64 {
    let w = space.weights()[0];
    assert!(space.weights().iter().all(|&v| v == w), "oracle needs uniform weights");
    w * 0.5 * max_assignment(&constraint_matrix(space, u, s))
}

/// `inf (Σ_k ‖g_k‖_{L^2}^q)^{1/q}` over fractional `s`-gradients, solved as
/// one program over all levels by a plain log-barrier Newton method.
pub fn joint_besov_oracle(space: &MetricMeasureSpace, u: &[f64], s: f64, q: f64) -> f64 {
    let n = space.len();
    let level = |d: f64| {
        let mut k = (-d.log2()).floor() as i32;
        while d < 2f64.powi(-k - 1) {
            k += 1;
        }
        while d >= 2f64.powi(-k) {
            k -= 1;
        }
        k
    };
    // Variables (k, x) for points touched by a positive constraint.
    let mut var: std::collections::BTreeMap<(i32, usize), usize> = Default::default();
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let d = space.dist(x, y);
            let c = (u[x] - u[y]).abs() / d.powf(s);
            if c > 0.0 {
                let k = level(d);
                let len = var.len();
                let a = *var.entry((k, x)).or_insert(len);
                let len = var.len();
                let b = *var.entry((k, y)).or_insert(len);
                rows.push((a, b, c));
            }
        }
    }
    let m = var.len();
    if m == 0 {
        return 0.0;
    }
    let mut groups: std::collections::BTreeMap<i32, Vec<(usize, f64)>> = Default::default();
    for (&(k, x), &i) in &var {
        groups.entry(k).or_default().push((i, space.weights()[x]));
    }
    let cmax = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut z = DVector::from_element(m, cmax);
    let objective = |z: &DVector<f64>| -> f64 {
        groups
            .values()
            .map(|g| g.iter().map(|&(i, w)| w * z[i] * z[i]).sum::<f64>().powf(q / 2.0))
            .sum()
    };
    let barrier = |z: &DVector<f64>, t: f64| -> f64 {
        let mut v = t * objective(z);
        for &(a, b, c) in &rows {
            let sl = z[a] + z[b] - c;
            if sl <= 0.0 {
                return f64::INFINITY;
            }
            v -= sl.ln();
        }
        for i in 0..m {
            if z[i] <= 0.0 {
                return f64::INFINITY;
            }
            v -= z[i].ln();
        }
        v
    };
    let n_constraints = (rows.len() + m) as f64;
    let mut t = 1.0;
    while n_constraints / t > 1e-13 * objective(&z).max(1e-300) {
        for _ in 0..100 {
            let mut grad = DVector::zeros(m);
            let mut hess = DMatrix::<f64>::zeros(m, m);
            for g in groups.values() {
                let a: f64 = g.iter().map(|&(i, w)| w * z[i] * z[i]).sum();
                let f1 = q * a.powf(q / 2.0 - 1.0);
                let f2 = q * (q - 2.0) * a.powf(q / 2.0 - 2.0);
                for &(i, wi) in g {
                    grad[i] += t * f1 * wi * z[i];
                    hess[(i, i)] += t * f1 * wi;
                    for &(j, wj) in g {
                        hess[(i, j)] += t * f2 * wi * z[i] * wj * z[j];
                    }
                }
            }
            for &(a, b, c) in &rows {
                let sl = z[a] + z[b] - c;
                for &i in &[a, b] {
                    grad[i] -= 1.0 / sl;
                    for &j in &[a, b] {
                        hess[(i, j)] += 1.0 / (sl * sl);
                    }
                }
            }
            for i in 0..m {
                grad[i] -= 1.0 / z[i];
                hess[(i, i)] += 1.0 / (z[i] * z[i]);
            }
            let step = hess.clone().cholesky().expect("positive definite").solve(&(-&grad));
            let decrement = -grad.dot(&step);
            if decrement < 1e-18 {
                break;
            }
            let f0 = barrier(&z, t);
            let mut alpha = 1.0;
            loop {
                let cand = &z + &step * alpha;
                let f1 = barrier(&cand, t);
                if f1 <= f0 - 0.25 * alpha * decrement {
                    z = cand;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-20 {
                    break;
                }
            }
            if alpha < 1e-20 {
                break;
            }
        }
        t *= 8.0;
    }
    objective(&z).powf(1.0 / q)
}
