use super::report::{quotient, Supremum, VerificationReport, Witness};
use crate::error::{Error, Result};
use crate::exec;
use crate::hajlasz::GradientSequence;
use crate::params::sobolev_exponent;
use crate::space::MetricMeasureSpace;

/// Left-hand side of the fractional inequality: the mean oscillation, or the
/// best `L^{p*(ε)}` approximation by a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FractionalVariant {
    Mean,
    InfOverConstants { q_dim: f64 },
}

fn closed_ball(space: &MetricMeasureSpace, x: usize, r: f64) -> &[(f64, usize)] {
    let len = space.ball_len(x, r, true).max(1);
    &space.neighbors(x)[..len]
}

/// `u - u(x)` on the ball, so that a function constant on the ball yields
/// exact zeros.
fn shifted(space: &MetricMeasureSpace, u: &[f64], ball: &[(f64, usize)]) -> (Vec<f64>, Vec<f64>) {
    let base = u[ball[0].1];
    ball.iter().map(|&(_, y)| (u[y] - base, space.weights()[y])).unzip()
}

fn mean_oscillation(space: &MetricMeasureSpace, u: &[f64], ball: &[(f64, usize)]) -> f64 {
    let (v, w) = shifted(space, u, ball);
    let mass: f64 = w.iter().sum();
    let mean = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / mass;
    v.iter().zip(&w).map(|(a, b)| (a - mean).abs() * b).sum::<f64>() / mass
}

fn power_mean(space: &MetricMeasureSpace, g: &[f64], ball: &[(f64, usize)], p: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(_, y) in ball {
        let w = space.weights()[y];
        num += g[y].powf(p) * w;
        den += w;
    }
    (num / den).powf(1.0 / p)
}

/// `inf_c (Σ w|v - c|^e / Σ w)^{1/e}`. For `e >= 1` the objective is
/// convex in `c` and is minimised by golden-section search on `[min v, max v]`;
/// for `e < 1` it is concave between data values, so the minimum sits at one
/// of them.
pub fn min_deviation(values: &[f64], weights: &[f64], e: f64) -> f64 {
    let mass: f64 = weights.iter().sum();
    let f = |c: f64| -> f64 { values.iter().zip(weights).map(|(v, w)| (v - c).abs().powf(e) * w).sum() };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return 0.0;
    }
    let best = if e < 1.0 {
        values.iter().map(|&c| f(c)).fold(f64::INFINITY, f64::min)
    } else {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c1 = b - ratio * (b - a);
        let mut c2 = a + ratio * (b - a);
        let (mut f1, mut f2) = (f(c1), f(c2));
        let mut best = f(lo).min(f(hi)).min(f1).min(f2);
        let tol = 1e-14 * (hi - lo);
        for _ in 0..200 {
            if b - a <= tol {
                break;
            }
            if f1 <= f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - ratio * (b - a);
                f1 = f(c1);
                best = best.min(f1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + ratio * (b - a);
                f2 = f(c2);
                best = best.min(f2);
            }
        }
        best
    };
    (best / mass).powf(1.0 / e)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param(format!(
            "integrability exponent must be finite and > 0, got {p}"
        )));
    }
    Ok(())
}

/// Both sides at `(x, r)`: `⨍_{B̄(x,r)} |u - u_B|` and
/// `r^s (⨍_{B̄(x,2r)} g^p)^{1/p}`.
pub fn poincare_terms(
    space: &MetricMeasureSpace,
    u: &[f64],
    g: &[f64],
    s: f64,
    p: f64,
    x: usize,
    r: f64,
) -> (f64, f64) {
    let lhs = mean_oscillation(space, u, closed_ball(space, x, r));
    let rhs = r.powf(s) * power_mean(space, g, closed_ball(space, x, 2.0 * r), p);
    (lhs, rhs)
}

/// As [`poincare_terms`] with the left side replaced by
/// `inf_c (⨍_{B̄(x,r)} |u - c|^{p*})^{1/p*}`.
#[allow(clippy::too_many_arguments)]
pub fn sobolev_poincare_terms(
    space: &MetricMeasureSpace,
    u: &[f64],
    g: &[f64],
    s: f64,
    p: f64,
    p_star: f64,
    x: usize,
    r: f64,
) -> (f64, f64) {
    let (v, w) = shifted(space, u, closed_ball(space, x, r));
    let lhs = min_deviation(&v, &w, p_star);
    let rhs = r.powf(s) * power_mean(space, g, closed_ball(space, x, 2.0 * r), p);
    (lhs, rhs)
}

fn ball_sweep(
    space: &MetricMeasureSpace,
    radii: &[f64],
    terms: impl Fn(usize, f64) -> (f64, f64) + Sync + Send,
) -> Supremum<Witness> {
    exec::map_range(space.len(), |x| {
        let mut sup = Supremum::new();
        for &r in radii {
            let (lhs, rhs) = terms(x, r);
            if let Some(q) = quotient(lhs, rhs) {
                sup.offer(q, Witness::Ball { x, r });
            }
        }
        sup
    })
    .into_iter()
    .fold(Supremum::new(), Supremum::merge)
}

fn finish(mut report: VerificationReport, sup: Supremum<Witness>, tested: usize) -> VerificationReport {
    report.best_constant = sup.value;
    report.witness = sup.witness;
    report.pass = sup.value.is_finite();
    report.metric("balls_tested", tested as f64);
    if !report.pass {
        report.note("right-hand side vanishes on a ball where the left-hand side is positive");
    }
    report
}

/// Best `C` in `⨍_{B(x,r)} |u - u_B| <= C r^s (⨍_{B(x,2r)} g^p)^{1/p}` over
/// all points and the given radii, balls closed.
pub fn check_poincare(
    space: &MetricMeasureSpace,
    u: &[f64],
    g: &[f64],
    s: f64,
    p: f64,
    radii: &[f64],
) -> Result<VerificationReport> {
    check_exponent(p)?;
    let sup = ball_sweep(space, radii, |x, r| poincare_terms(space, u, g, s, p, x, r));
    let report = VerificationReport::new("poincare", "", "").param("s", s).param("p", p);
    Ok(finish(report, sup, space.len() * radii.len()))
}

/// Best `C` in the Sobolev–Poincaré inequality with `p* = Qp/(Q - sp)`.
#[allow(clippy::too_many_arguments)]
pub fn check_sobolev_poincare(
    space: &MetricMeasureSpace,
    u: &[f64],
    g: &[f64],
    s: f64,
    p: f64,
    q_dim: f64,
    radii: &[f64],
) -> Result<VerificationReport> {
    check_exponent(p)?;
    let p_star = sobolev_exponent(q_dim, p, s)
        .ok_or_else(|| Error::param(format!("p* undefined: Q = {q_dim} <= s p = {}", s * p)))?;
    let sup = ball_sweep(space, radii, |x, r| {
        sobolev_poincare_terms(space, u, g, s, p, p_star, x, r)
    });
    let report = VerificationReport::new("sobolev_poincare", "", "")
        .param("s", s)
        .param("p", p)
        .param("q_dim", q_dim)
        .param("p_star", p_star);
    Ok(finish(report, sup, space.len() * radii.len()))
}

/// Both sides of the fractional inequality at `(x, k)`:
/// the left side on `B̄(x, 2^-k)` and
/// `2^{-kε'} Σ_{j >= k-2} 2^{-j(s-ε')} (⨍_{B̄(x,2^{-k+1})} g_j^p)^{1/p}`,
/// the sum running over the levels stored in `seq`.
#[allow(clippy::too_many_arguments)]
pub fn fractional_poincare_terms(
    space: &MetricMeasureSpace,
    u: &[f64],
    seq: &GradientSequence,
    p: f64,
    eps: f64,
    eps_prime: f64,
    variant: FractionalVariant,
    x: usize,
    k: i32,
) -> (f64, f64) {
    let s = seq.s;
    let radius = 2f64.powi(-k);
    let ball = closed_ball(space, x, radius);
    let lhs = match variant {
        FractionalVariant::Mean => mean_oscillation(space, u, ball),
        FractionalVariant::InfOverConstants { q_dim } => {
            let e = sobolev_exponent(q_dim, p, eps).unwrap_or(f64::NAN);
            let (v, w) = shifted(space, u, ball);
            min_deviation(&v, &w, e)
        }
    };
    let outer = closed_ball(space, x, 2.0 * radius);
    let mut sum = 0.0;
    for j in (k - 2).max(seq.k_min)..=seq.k_max() {
        let g = seq.level(j).expect("level inside range");
        sum += 2f64.powf(-(j as f64) * (s - eps_prime)) * power_mean(space, g, outer, p);
    }
    (lhs, 2f64.powf(-(k as f64) * eps_prime) * sum)
}

/// Best `C` in the fractional Poincaré inequality over all points and the
/// levels `k` from `seq.k_min` to `seq.k_max + 1`: above that range every
/// ball is a singleton, below it every ball is the whole space and the right
/// side only grows as `k` decreases.
#[allow(clippy::too_many_arguments)]
pub fn check_fractional_poincare(
    space: &MetricMeasureSpace,
    u: &[f64],
    seq: &GradientSequence,
    p: f64,
    eps: f64,
    eps_prime: f64,
    variant: FractionalVariant,
) -> Result<VerificationReport> {
    check_exponent(p)?;
    let s = seq.s;
    if !(0.0 < eps && eps < eps_prime && eps_prime < s) {
        return Err(Error::param(format!(
            "need 0 < eps < eps' < s, got eps = {eps}, eps' = {eps_prime}, s = {s}"
        )));
    }
    let mut report = VerificationReport::new("fractional_poincare", "", "")
        .param("s", s)
        .param("p", p)
        .param("eps", eps)
        .param("eps_prime", eps_prime);
    if let FractionalVariant::InfOverConstants { q_dim } = variant {
        let e = sobolev_exponent(q_dim, p, eps)
            .ok_or_else(|| Error::param(format!("p*(eps) undefined: Q = {q_dim} <= eps p = {}", eps * p)))?;
        report = report.param("q_dim", q_dim).param("p_star", e);
        report.inequality = "fractional_sobolev_poincare".into();
    }
    let ks: Vec<i32> = (seq.k_min..=seq.k_max() + 1).collect();
    let sup = exec::map_range(space.len(), |x| {
        let mut sup = Supremum::new();
        for &k in &ks {
            let (lhs, rhs) = fractional_poincare_terms(space, u, seq, p, eps, eps_prime, variant, x, k);
            if let Some(q) = quotient(lhs, rhs) {
                sup.offer(q, Witness::Level { x, k });
            }
        }
        sup
    })
    .into_iter()
    .fold(Supremum::new(), Supremum::merge);
    report.note(format!(
        "j-sum truncated to the sequence levels [{}, {}]",
        seq.k_min,
        seq.k_max()
    ));
    Ok(finish(report, sup, space.len() * ks.len()))
}
