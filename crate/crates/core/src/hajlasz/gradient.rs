use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::space::MetricMeasureSpace;

/// A nonnegative function `g` offered as an `s`-Hajłasz gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCandidate {
    pub g: Vec<f64>,
    pub s: f64,
}

/// Outcome of checking pointwise gradient inequalities over all pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub ok: bool,
    /// `max |u(x) - u(y)| - d(x,y)^s (g(x) + g(y))`; 0 when there are no
    /// pairs.
    pub worst_violation: f64,
    pub witness: Option<(usize, usize)>,
    /// Annulus level of the witness pair for sequence checks.
    pub level: Option<i32>,
}

/// The constraint `g(x) + g(y) >= c` for one unordered pair `x < y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairConstraint {
    pub x: usize,
    pub y: usize,
    pub c: f64,
}

/// All pairs `x < y` with `c = |u(x) - u(y)| / d(x,y)^s > 0`, ordered by
/// `(x, y)`.
pub fn pair_constraints(space: &MetricMeasureSpace, u: &[f64], s: f64) -> Vec<PairConstraint> {
    let n = space.len();
    exec::map_range(n, |x| {
        ((x + 1)..n)
            .filter_map(|y| {
                let c = (u[x] - u[y]).abs() / space.dist(x, y).powf(s);
                (c > 0.0).then_some(PairConstraint { x, y, c })
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

fn worst_pair(
    space: &MetricMeasureSpace,
    violation: impl Fn(usize, usize) -> f64 + Sync,
) -> (f64, Option<(usize, usize)>) {
    let n = space.len();
    let per_point = exec::map_range(n, |x| {
        let mut best: (f64, Option<(usize, usize)>) = (f64::NEG_INFINITY, None);
        for y in (x + 1)..n {
            let v = violation(x, y);
            if v > best.0 {
                best = (v, Some((x, y)));
            }
        }
        best
    });
    let mut best: (f64, Option<(usize, usize)>) = (f64::NEG_INFINITY, None);
    for b in per_point {
        if b.0 > best.0 {
            best = b;
        }
    }
    if best.1.is_none() {
        best.0 = 0.0;
    }
    best
}

/// Checks `|u(x) - u(y)| <= d(x,y)^s (g(x) + g(y))` on all pairs.
pub fn is_hajlasz_gradient(space: &MetricMeasureSpace, u: &[f64], g: &[f64], s: f64, tol: f64) -> GradientCheck {
    let (worst, witness) = worst_pair(space, |x, y| {
        (u[x] - u[y]).abs() - space.dist(x, y).powf(s) * (g[x] + g[y])
    });
    GradientCheck {
        ok: worst <= tol,
        worst_violation: worst,
        witness,
        level: None,
    }
}

/// `g(x) = max_{y != x} |u(x) - u(y)| / d(x,y)^s`. Each pair constraint is
/// met by either endpoint alone.
pub fn canonical_gradient(space: &MetricMeasureSpace, u: &[f64], s: f64) -> GradientCandidate {
    let n = space.len();
    let g = exec::map_range(n, |x| {
        (0..n)
            .filter(|&y| y != x)
            .map(|y| (u[x] - u[y]).abs() / space.dist(x, y).powf(s))
            .fold(0.0, f64::max)
    });
    GradientCandidate { g, s }
}

/// The unique `k` with `2^{-k-1} <= d < 2^{-k}`.
pub fn annulus_level(d: f64) -> i32 {
    assert!(d > 0.0 && d.is_finite(), "annulus of a non-positive distance");
    let mut k = (-d.log2()).ceil() as i32 - 1;
    loop {
        if d < 2f64.powi(-k - 1) {
            k += 1;
        } else if d >= 2f64.powi(-k) {
            k -= 1;
        } else {
            return k;
        }
    }
}

/// A family `(g_k)` for `k` in `k_min..=k_max`; level `k` constrains the
/// pairs at distance in `[2^{-k-1}, 2^{-k})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSequence {
    pub k_min: i32,
    pub levels: Vec<Vec<f64>>,
    pub s: f64,
}

impl GradientSequence {
    pub fn zeros(k_min: i32, k_max: i32, n: usize, s: f64) -> Self {
        let count = (k_max - k_min + 1).max(0) as usize;
        Self {
            k_min,
            levels: vec![vec![0.0; n]; count],
            s,
        }
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.levels.len() as i32 - 1
    }

    pub fn level(&self, k: i32) -> Option<&[f64]> {
        let i = k.checked_sub(self.k_min)?;
        usize::try_from(i)
            .ok()
            .and_then(|i| self.levels.get(i))
            .map(Vec::as_slice)
    }

    pub fn ks(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.levels.len()).map(move |i| self.k_min + i as i32)
    }

    /// Same sequence with `extra` zero levels added on both ends.
    pub fn extended(&self, extra: usize) -> Self {
        let n = self.levels.first().map_or(0, Vec::len);
        let mut levels = vec![vec![0.0; n]; extra];
        levels.extend(self.levels.iter().cloned());
        levels.extend(std::iter::repeat_n(vec![0.0; n], extra));
        Self {
            k_min: self.k_min - extra as i32,
            levels,
            s: self.s,
        }
    }
}

/// Annulus levels realized by pairs of the space: `(level(diam),
/// level(min_gap))`, or `None` for a single point.
pub fn realized_range(space: &MetricMeasureSpace) -> Option<(i32, i32)> {
    (space.len() > 1).then(|| (annulus_level(space.diam()), annulus_level(space.min_gap())))
}

/// Checks the level-`k` inequality on every pair, `k` being the pair's
/// annulus level.
pub fn is_fractional_gradient(
    space: &MetricMeasureSpace,
    u: &[f64],
    seq: &GradientSequence,
    s: f64,
    tol: f64,
) -> Result<GradientCheck> {
    if let Some((lo, hi)) = realized_range(space) {
        if lo < seq.k_min || hi > seq.k_max() {
            let (d, level) = if lo < seq.k_min {
                (space.diam(), lo)
            } else {
                (space.min_gap(), hi)
            };
            return Err(Error::AnnulusRange {
                distance: d,
                level,
                k_min: seq.k_min,
                k_max: seq.k_max(),
            });
        }
    }
    let (worst, witness) = worst_pair(space, |x, y| {
        let d = space.dist(x, y);
        let g = seq.level(annulus_level(d)).expect("level inside range");
        (u[x] - u[y]).abs() - d.powf(s) * (g[x] + g[y])
    });
    Ok(GradientCheck {
        ok: worst <= tol,
        worst_violation: worst,
        witness,
        level: witness.map(|(x, y)| annulus_level(space.dist(x, y))),
    })
}

/// `g_k(x) = max |u(x) - u(y)| / d^s` over `y` in the `k`-annulus of `x`.
pub fn canonical_fractional_gradient(space: &MetricMeasureSpace, u: &[f64], s: f64) -> GradientSequence {
    let n = space.len();
    let Some((k_min, k_max)) = realized_range(space) else {
        return GradientSequence::zeros(0, -1, n, s);
    };
    let count = (k_max - k_min + 1) as usize;
    let columns = exec::map_range(n, |x| {
        let mut col = vec![0.0; count];
        for y in (0..n).filter(|&y| y != x) {
            let d = space.dist(x, y);
            let i = (annulus_level(d) - k_min) as usize;
            col[i] = f64::max(col[i], (u[x] - u[y]).abs() / d.powf(s));
        }
        col
    });
    let levels = (0..count).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    GradientSequence { k_min, levels, s }
}

/// Pair constraints split by annulus level, as `(k, pairs)` with `k`
/// increasing.
pub fn level_constraints(space: &MetricMeasureSpace, u: &[f64], s: f64) -> Vec<(i32, Vec<PairConstraint>)> {
    let mut out: Vec<(i32, Vec<PairConstraint>)> = Vec::new();
    let mut tagged: Vec<(i32, PairConstraint)> = pair_constraints(space, u, s)
        .into_iter()
        .map(|pc| (annulus_level(space.dist(pc.x, pc.y)), pc))
        .collect();
    tagged.sort_by_key(|&(k, pc)| (k, pc.x, pc.y));
    for (k, pc) in tagged {
        match out.last_mut() {
            Some((last, pairs)) if *last == k => pairs.push(pc),
            _ => out.push((k, vec![pc])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{default_labels, Metric};

    fn two_point() -> MetricMeasureSpace {
        MetricMeasureSpace::from_matrix_unit(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn grid5() -> MetricMeasureSpace {
        MetricMeasureSpace::from_coords(
            default_labels(5),
            (0..5).map(|i| vec![i as f64]).collect(),
            Metric::Euclidean,
            vec![1.0; 5],
        )
        .unwrap()
    }

    #[test]
    fn hajlasz_check_examples() {
        let t = two_point();
        let c = is_hajlasz_gradient(&t, &[2.0, 2.0], &[0.0, 0.0], 0.7, 0.0);
        assert!(c.ok && c.worst_violation <= 0.0);
        let c = is_hajlasz_gradient(&t, &[0.0, 1.0], &[0.5, 0.5], 1.0, 0.0);
        assert!(c.ok && c.worst_violation == 0.0);
        let c = is_hajlasz_gradient(&t, &[0.0, 1.0], &[0.2, 0.2], 1.0, 0.0);
        assert!(!c.ok && (c.worst_violation - 0.6).abs() < 1e-15);
        assert_eq!(c.witness, Some((0, 1)));
    }

    #[test]
    fn canonical_examples() {
        let t = two_point();
        assert_eq!(canonical_gradient(&t, &[3.0, 3.0], 1.0).g, vec![0.0, 0.0]);
        assert_eq!(canonical_gradient(&t, &[0.0, 1.0], 1.0).g, vec![1.0, 1.0]);
        let g = grid5();
        assert_eq!(canonical_gradient(&g, &[0.0, 1.0, 2.0, 3.0, 4.0], 1.0).g, vec![1.0; 5]);
    }

    #[test]
    fn annulus_levels() {
        assert_eq!(annulus_level(1.0), -1);
        assert_eq!(annulus_level(0.5), 0);
        assert_eq!(annulus_level(0.75), 0);
        assert_eq!(annulus_level(0.4999999999), 1);
        assert_eq!(annulus_level(3.0), -2);
        assert_eq!(annulus_level(4.0), -3);
        for i in 1..2000 {
            let d = i as f64 * 0.01;
            let k = annulus_level(d);
            assert!(2f64.powi(-k - 1) <= d && d < 2f64.powi(-k));
        }
    }

    #[test]
    fn fractional_check_examples() {
        let t = two_point();
        let mut seq = GradientSequence::zeros(-1, -1, 2, 1.0);
        assert!(is_fractional_gradient(&t, &[1.0, 1.0], &seq, 1.0, 0.0).unwrap().ok);
        seq.levels[0] = vec![0.5, 0.5];
        assert!(is_fractional_gradient(&t, &[0.0, 1.0], &seq, 1.0, 0.0).unwrap().ok);
        seq.levels[0] = vec![0.0, 0.0];
        let c = is_fractional_gradient(&t, &[0.0, 1.0], &seq, 1.0, 0.0).unwrap();
        assert!(!c.ok);
        assert_eq!((c.witness, c.level), (Some((0, 1)), Some(-1)));
        let short = GradientSequence::zeros(0, 3, 2, 1.0);
        assert!(matches!(
            is_fractional_gradient(&t, &[0.0, 1.0], &short, 1.0, 0.0),
            Err(Error::AnnulusRange { level: -1, .. })
        ));
    }

    #[test]
    fn canonical_sequence_examples() {
        let t = two_point();
        let seq = canonical_fractional_gradient(&t, &[0.0, 1.0], 1.0);
        assert_eq!((seq.k_min, seq.k_max()), (-1, -1));
        assert_eq!(seq.levels[0], vec![1.0, 1.0]);
        let zero = canonical_fractional_gradient(&t, &[5.0, 5.0], 1.0);
        assert!(zero.levels.iter().flatten().all(|&v| v == 0.0));

        let g = grid5();
        let seq = canonical_fractional_gradient(&g, &[0.0, 1.0, 2.0, 3.0, 4.0], 1.0);
        // distances 1 -> k=-1, 2,3 -> k=-2, 4 -> k=-3
        assert_eq!((seq.k_min, seq.k_max()), (-3, -1));
        assert_eq!(seq.level(-1).unwrap(), &[1.0; 5]);
        assert_eq!(seq.level(-3).unwrap(), &[1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(
            is_fractional_gradient(&g, &[0.0, 1.0, 2.0, 3.0, 4.0], &seq, 1.0, 0.0)
                .unwrap()
                .ok
        );
        let ext = seq.extended(2);
        assert_eq!((ext.k_min, ext.k_max()), (-5, 1));
        assert_eq!(ext.level(-3), seq.level(-3));
    }
}
