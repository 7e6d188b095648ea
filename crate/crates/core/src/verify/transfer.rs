use serde::{Deserialize, Serialize};

use super::report::{quotient, Supremum, VerificationReport, Witness};
use super::{noise_floor, SpaceContext};
use crate::error::{Error, Result};
use crate::exec;
use crate::hajlasz::{annulus_level, is_fractional_gradient, is_hajlasz_gradient, GradientSequence};
use crate::maximal::{discrete_fractional_maximal, fractional_maximal};
use crate::params::SmoothnessParams;
use crate::space::MetricMeasureSpace;

/// Violation allowed when re-checking a transferred gradient.
const SELF_CHECK_TOL: f64 = 1e-10;

/// Which gradient of `M*_α u` the construction produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferBranch {
    /// `s + α <= 1`: `h = (M g^t)^{1/t}`, an `(s+α)`-gradient.
    Fractional,
    /// `s + α > 1`: `h = (M_{t(s+α-1)} g^t)^{1/t}`, a `1`-gradient.
    Lipschitz,
}

#[derive(Clone, Debug)]
pub struct GradientTransfer {
    pub branch: TransferBranch,
    /// Smoothness exponent of the produced gradient.
    pub exponent: f64,
    /// `M*_α u`.
    pub target: Vec<f64>,
    /// The unscaled gradient `h`.
    pub h: Vec<f64>,
    /// `C* h`; all zeros when `C*` is infinite.
    pub g_tilde: Vec<f64>,
    pub report: VerificationReport,
}

#[derive(Clone, Debug)]
pub struct SequenceTransfer {
    pub target: Vec<f64>,
    /// `(g̃_k)` before scaling.
    pub h: GradientSequence,
    /// `C* g̃_k`.
    pub g_tilde: GradientSequence,
    pub report: VerificationReport,
}

/// `(M_β g^t)^{1/t}` over the context's radius set.
fn power_maximal(ctx: &SpaceContext, g: &[f64], beta: f64, t: f64) -> Result<Vec<f64>> {
    let powered: Vec<f64> = g.iter().map(|v| v.abs().powf(t)).collect();
    let m = fractional_maximal(&ctx.space, &powered, beta, &ctx.radii)?;
    Ok(m.values.into_iter().map(|v| v.powf(1.0 / t)).collect())
}

/// `|F(x) - F(y)| / (d^e (h_x(x) + h_x(y)))` for one pair, `h` chosen by the
/// pair; `None` when the numerator is below `floor`.
pub fn transfer_ratio(num: f64, d: f64, e: f64, hx: f64, hy: f64, floor: f64) -> Option<f64> {
    if num <= floor {
        return None;
    }
    quotient(num, d.powf(e) * (hx + hy))
}

/// Maximum of `transfer_ratio` over all pairs; `h(k, x)` gives the gradient
/// value used for a pair at annulus level `k` (ignored for plain gradients).
fn pair_supremum(
    space: &MetricMeasureSpace,
    target: &[f64],
    e: f64,
    h: impl Fn(i32, usize) -> f64 + Sync + Send,
    levelled: bool,
) -> Supremum<Witness> {
    let floor = noise_floor(target);
    let n = space.len();
    exec::map_range(n, |x| {
        let mut sup = Supremum::new();
        for y in x + 1..n {
            let d = space.dist(x, y);
            let k = if levelled { annulus_level(d) } else { 0 };
            let num = (target[x] - target[y]).abs();
            if let Some(q) = transfer_ratio(num, d, e, h(k, x), h(k, y), floor) {
                sup.offer(q, Witness::Pair { x, y });
            }
        }
        sup
    })
    .into_iter()
    .fold(Supremum::new(), Supremum::merge)
}

/// Builds `h` from an `s`-gradient `g` of `u` and measures the smallest `C`
/// for which `C h` is a gradient of `M*_α u`: of order `s + α` when
/// `s + α <= 1`, of order 1 otherwise.
pub fn gradient_transfer(ctx: &SpaceContext, u: &[f64], g: &[f64], prm: &SmoothnessParams) -> Result<GradientTransfer> {
    prm.validate_hajlasz_transfer(ctx.q_dim)?;
    let space = &ctx.space;
    let sa = prm.s + prm.alpha;
    let (branch, beta, exponent) = if sa <= 1.0 {
        (TransferBranch::Fractional, 0.0, sa)
    } else {
        (TransferBranch::Lipschitz, prm.t * (sa - 1.0), 1.0)
    };
    let target = discrete_fractional_maximal(space, u, prm.alpha, &ctx.family).values;
    let h = power_maximal(ctx, g, beta, prm.t)?;
    let sup = pair_supremum(space, &target, exponent, |_, x| h[x], false);

    let mut report = VerificationReport::new("gradient_transfer", ctx.id.clone(), "")
        .param("s", prm.s)
        .param("alpha", prm.alpha)
        .param("t", prm.t)
        .param("q_dim", ctx.q_dim)
        .param("exponent", exponent);
    report.note(format!("branch: {branch:?}").to_lowercase());
    report.note("M*_alpha u is finite: the space is finite and the scales are capped");
    report.best_constant = sup.value;
    report.witness = sup.witness;
    let g_tilde = if sup.value.is_finite() {
        let g_tilde: Vec<f64> = h.iter().map(|v| sup.value * v).collect();
        let check = is_hajlasz_gradient(
            space,
            &target,
            &g_tilde,
            exponent,
            SELF_CHECK_TOL + noise_floor(&target),
        );
        report.metric("self_check_violation", check.worst_violation.max(0.0));
        report.pass = check.ok;
        g_tilde
    } else {
        report.pass = false;
        report.note("h vanishes on a pair where M*_alpha u varies");
        vec![0.0; h.len()]
    };
    Ok(GradientTransfer {
        branch,
        exponent,
        target,
        h,
        g_tilde,
        report,
    })
}

/// `g̃_k = Σ_{j<=k} 2^{(j-k)δ} H_j + Σ_{j>=k-7} 2^{(k-j)(s-ε')} H_j` with
/// `H_j = (M g_j^t)^{1/t}`, both sums over the levels of `seq`.
fn sequence_gradient(ctx: &SpaceContext, seq: &GradientSequence, prm: &SmoothnessParams) -> Result<GradientSequence> {
    let maximal = exec::map_slice(&seq.levels, |g| power_maximal(ctx, g, 0.0, prm.t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = ctx.space.len();
    let (k_min, k_max) = (seq.k_min, seq.k_max());
    let levels = seq
        .ks()
        .map(|k| {
            let mut out = vec![0.0; n];
            for j in k_min..=k {
                let w = 2f64.powf((j - k) as f64 * prm.delta);
                for (o, v) in out.iter_mut().zip(&maximal[(j - k_min) as usize]) {
                    *o += w * v;
                }
            }
            for j in (k - 7).max(k_min)..=k_max {
                let w = 2f64.powf((k - j) as f64 * (prm.s - prm.eps_prime));
                for (o, v) in out.iter_mut().zip(&maximal[(j - k_min) as usize]) {
                    *o += w * v;
                }
            }
            out
        })
        .collect();
    Ok(GradientSequence {
        k_min,
        levels,
        s: prm.s + prm.alpha,
    })
}

fn sequence_constant(ctx: &SpaceContext, target: &[f64], h: &GradientSequence) -> Result<Supremum<Witness>> {
    if let Some((lo, hi)) = crate::hajlasz::realized_range(&ctx.space) {
        if lo < h.k_min || hi > h.k_max() {
            return Err(Error::AnnulusRange {
                distance: if lo < h.k_min {
                    ctx.space.diam()
                } else {
                    ctx.space.min_gap()
                },
                level: if lo < h.k_min { lo } else { hi },
                k_min: h.k_min,
                k_max: h.k_max(),
            });
        }
    }
    Ok(pair_supremum(
        &ctx.space,
        target,
        h.s,
        |k, x| h.level(k).expect("level inside range")[x],
        true,
    ))
}

/// Builds `(g̃_k)` from a fractional `s`-gradient of `u` and measures the
/// smallest `C` for which `(C g̃_k)` is a fractional `(s+α)`-gradient of
/// `M*_α u`. The computation is repeated with two zero levels added on each
/// side of `seq` and the relative change of `C` is reported.
pub fn sequence_transfer(
    ctx: &SpaceContext,
    u: &[f64],
    seq: &GradientSequence,
    prm: &SmoothnessParams,
) -> Result<SequenceTransfer> {
    prm.validate_sequence_transfer(ctx.q_dim)?;
    let target = discrete_fractional_maximal(&ctx.space, u, prm.alpha, &ctx.family).values;
    let h = sequence_gradient(ctx, seq, prm)?;
    let sup = sequence_constant(ctx, &target, &h)?;
    let extended = sequence_gradient(ctx, &seq.extended(2), prm)?;
    let wide = sequence_constant(ctx, &target, &extended)?;

    let mut report = VerificationReport::new("sequence_transfer", ctx.id.clone(), "")
        .param("s", prm.s)
        .param("alpha", prm.alpha)
        .param("t", prm.t)
        .param("eps", prm.eps)
        .param("eps_prime", prm.eps_prime)
        .param("delta", prm.delta)
        .param("q_dim", ctx.q_dim);
    report.note(format!(
        "sums over j truncated to the sequence levels [{}, {}]",
        seq.k_min,
        seq.k_max()
    ));
    report.note("M*_alpha u is finite: the space is finite and the scales are capped");
    report.best_constant = sup.value;
    report.witness = sup.witness;
    let delta = if sup.value == wide.value {
        0.0
    } else {
        (wide.value - sup.value).abs() / sup.value
    };
    report.metric("truncation_delta", delta);
    report.metric("extended_constant", wide.value);

    let g_tilde = if sup.value.is_finite() {
        let scaled = GradientSequence {
            k_min: h.k_min,
            levels: h
                .levels
                .iter()
                .map(|l| l.iter().map(|v| sup.value * v).collect())
                .collect(),
            s: h.s,
        };
        let check = is_fractional_gradient(&ctx.space, &target, &scaled, h.s, SELF_CHECK_TOL + noise_floor(&target))?;
        report.metric("self_check_violation", check.worst_violation.max(0.0));
        report.pass = check.ok && delta <= 0.01;
        scaled
    } else {
        report.pass = false;
        report.note("g~ vanishes on a pair where M*_alpha u varies");
        GradientSequence::zeros(h.k_min, h.k_max(), ctx.space.len(), h.s)
    };
    Ok(SequenceTransfer {
        target,
        h,
        g_tilde,
        report,
    })
}
