use super::report::{quotient, Supremum, VerificationReport, Witness};
use super::SpaceContext;
use crate::error::{Error, Result};
use crate::exec;
use crate::maximal::fractional_maximal;
use crate::norms::{mixed_norm, MixedKind};

/// `(M g_k)_k` with the Hardy–Littlewood operator over the context's radii.
pub fn maximal_levels(ctx: &SpaceContext, levels: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    levels
        .iter()
        .map(|g| fractional_maximal(&ctx.space, g, 0.0, &ctx.radii).map(|m| m.values))
        .collect()
}

/// Best `C` in `‖(M g_k)‖_{L^p(ℓq)} <= C ‖(g_k)‖_{L^p(ℓq)}` over the given
/// sequences; sequences with vanishing right side are skipped.
pub fn fefferman_stein_check(ctx: &SpaceContext, seqs: &[Vec<Vec<f64>>], p: f64, q: f64) -> Result<VerificationReport> {
    if !(p > 1.0 && q > 1.0) {
        return Err(Error::param(format!("need p, q > 1, got p = {p}, q = {q}")));
    }
    let w = ctx.space.weights();
    let sides = exec::map_slice(seqs, |levels| -> Result<(f64, f64)> {
        let m = maximal_levels(ctx, levels)?;
        Ok((
            mixed_norm(&m, w, p, q, MixedKind::LpLq),
            mixed_norm(levels, w, p, q, MixedKind::LpLq),
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut sup = Supremum::new();
    let mut tested = 0usize;
    for (i, &(lhs, rhs)) in sides.iter().enumerate() {
        if rhs > 0.0 {
            tested += 1;
        }
        if let Some(r) = quotient(lhs, rhs) {
            sup.offer(
                r,
                Witness::Instance {
                    index: i,
                    id: format!("sequence {i}"),
                },
            );
        }
    }
    let mut rep = VerificationReport::new("fefferman_stein", ctx.id.clone(), "sequences")
        .param("p", p)
        .param("q", q);
    rep.best_constant = sup.value;
    rep.witness = sup.witness;
    rep.pass = sup.value.is_finite();
    rep.metric("tested", tested as f64);
    rep.metric("skipped", (seqs.len() - tested) as f64);
    Ok(rep)
}
