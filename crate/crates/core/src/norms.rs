//! Weighted Lebesgue norms and the two mixed sequence norms.

use serde::{Deserialize, Serialize};

/// `(Σ |u(x)|^p w(x))^{1/p}`, or `max |u|` for `p = ∞`. For `0 < p < 1` this
/// is the usual quasi-norm.
pub fn lp_norm(u: &[f64], weights: &[f64], p: f64) -> f64 {
    debug_assert_eq!(u.len(), weights.len());
    if p.is_infinite() {
        return u.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = u.iter().zip(weights).map(|(v, w)| v.abs().powf(p) * w).sum();
    sum.powf(1.0 / p)
}

/// Unweighted `ℓq` norm of a finite sequence.
pub fn lq_norm(values: impl IntoIterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        return values.into_iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = values.into_iter().map(|v| v.abs().powf(q)).sum();
    sum.powf(1.0 / q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedKind {
    /// `‖ ‖(f_k(x))_k‖_{ℓq} ‖_{L^p}`: the Triebel–Lizorkin arrangement.
    LpLq,
    /// `‖ (‖f_k‖_{L^p})_k ‖_{ℓq}`: the Besov arrangement.
    LqLp,
}

/// Mixed norm of a level-indexed family of functions on the same points.
pub fn mixed_norm(levels: &[Vec<f64>], weights: &[f64], p: f64, q: f64, kind: MixedKind) -> f64 {
    match kind {
        MixedKind::LqLp => lq_norm(levels.iter().map(|g| lp_norm(g, weights, p)), q),
        MixedKind::LpLq => {
            let inner: Vec<f64> = (0..weights.len())
                .map(|x| lq_norm(levels.iter().map(|g| g[x]), q))
                .collect();
            lp_norm(&inner, weights, p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_level_is_plain_lp() {
        let g = vec![vec![1.0, -2.0, 0.5]];
        let w = [1.0, 2.0, 0.5];
        for kind in [MixedKind::LpLq, MixedKind::LqLp] {
            assert!((mixed_norm(&g, &w, 2.0, 3.0, kind) - lp_norm(&g[0], &w, 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_equal_levels_q2() {
        let g = vec![vec![1.0, 3.0], vec![1.0, 3.0]];
        let w = [1.0, 1.0];
        let one = lp_norm(&g[0], &w, 1.5);
        assert!((mixed_norm(&g, &w, 1.5, 2.0, MixedKind::LqLp) - 2f64.sqrt() * one).abs() < 1e-14);
    }

    #[test]
    fn weighted_sup() {
        assert_eq!(lp_norm(&[1.0, -4.0], &[9.0, 0.1], f64::INFINITY), 4.0);
        assert_eq!(lp_norm(&[3.0], &[4.0], 2.0), 6.0);
    }

    fn direct_lplq(levels: &[Vec<f64>], w: &[f64], p: f64, q: f64) -> f64 {
        let mut total = 0.0;
        for x in 0..w.len() {
            let mut s = 0.0;
            for g in levels {
                s += g[x].abs().powf(q);
            }
            total += w[x] * s.powf(p / q);
        }
        total.powf(1.0 / p)
    }

    proptest! {
        #[test]
        fn matches_direct_formula(
            vals in prop::collection::vec(-5.0f64..5.0, 12),
            w in prop::collection::vec(0.1f64..3.0, 4),
            p in 0.5f64..4.0,
            q in 0.5f64..4.0,
        ) {
            let levels: Vec<Vec<f64>> = vals.chunks(4).map(<[f64]>::to_vec).collect();
            let a = mixed_norm(&levels, &w, p, q, MixedKind::LpLq);
            let b = direct_lplq(&levels, &w, p, q);
            prop_assert!((a - b).abs() <= 1e-10 * b.max(1.0));
        }

        #[test]
        fn non_increasing_in_q(
            vals in prop::collection::vec(-5.0f64..5.0, 12),
            p in 1.0f64..3.0,
            q in 1.0f64..4.0,
            dq in 0.0f64..3.0,
        ) {
            let levels: Vec<Vec<f64>> = vals.chunks(4).map(<[f64]>::to_vec).collect();
            let w = [1.0; 4];
            for kind in [MixedKind::LpLq, MixedKind::LqLp] {
                let lo = mixed_norm(&levels, &w, p, q + dq, kind);
                let hi = mixed_norm(&levels, &w, p, q, kind);
                prop_assert!(lo <= hi * (1.0 + 1e-12));
                prop_assert!(mixed_norm(&levels, &w, p, f64::INFINITY, kind) <= lo * (1.0 + 1e-12));
            }
        }
    }
}
