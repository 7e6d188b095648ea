//! Scale-`r` coverings and the subordinate Lipschitz partition of unity.
//!
//! Centers form a greedy maximal `r`-separated net taken in index order, so
//! every point lies in the open ball `B(x_i, r)` of some center and distinct
//! centers are at least `r` apart. The partition is built from the cutoffs
//! `ψ_i(x) = clamp((6r - d(x, x_i)) / 3r, 0, 1)` normalised to sum to one.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::space::MetricMeasureSpace;

#[derive(Clone, Debug)]
pub struct Cover {
    pub r: f64,
    /// Center point indices in selection order (increasing).
    pub centers: Vec<usize>,
    /// Open balls `B(x_i, r)`, `B(x_i, 3r)`, `B(x_i, 6r)`, sorted by index.
    pub balls_r: Vec<Vec<usize>>,
    pub balls_3r: Vec<Vec<usize>>,
    pub balls_6r: Vec<Vec<usize>>,
}

pub fn build_cover(space: &MetricMeasureSpace, r: f64) -> Result<Cover> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param(format!("cover radius must be positive, got {r}")));
    }
    let n = space.len();
    let mut covered = vec![false; n];
    let mut centers = Vec::new();
    for x in 0..n {
        if covered[x] {
            continue;
        }
        centers.push(x);
        let len = space.ball_len(x, r, false);
        for &(_, y) in &space.neighbors(x)[..len] {
            covered[y] = true;
        }
    }
    assert!(covered.iter().all(|&c| c), "greedy net left a point uncovered");
    let balls = |factor: f64| exec::map_slice(&centers, |&c| space.ball(c, factor * r, false));
    Ok(Cover {
        r,
        balls_r: balls(1.0),
        balls_3r: balls(3.0),
        balls_6r: balls(6.0),
        centers,
    })
}

/// Per-point count of dilated balls `B(x_i, 6r)` containing it.
fn overlap_profile(space: &MetricMeasureSpace, cover: &Cover) -> Vec<usize> {
    let mut count = vec![0usize; space.len()];
    for ball in &cover.balls_6r {
        for &y in ball {
            count[y] += 1;
        }
    }
    count
}

/// `N = max_x #{i : x ∈ B(x_i, 6r)}`.
pub fn overlap_count(space: &MetricMeasureSpace, cover: &Cover) -> usize {
    overlap_profile(space, cover).into_iter().max().unwrap_or(0).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiWitness {
    pub value: f64,
    /// Slot of the center in [`Cover::centers`].
    pub center: usize,
    pub x: usize,
    /// Second point for Lipschitz witnesses (equal to `x` otherwise).
    pub y: usize,
}

#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub r: f64,
    /// For each point, `(center slot, φ_i(x))` over centers with
    /// `φ_i(x) > 0`, sorted by slot.
    pub phi: Vec<Vec<(usize, f64)>>,
    pub nu: PhiWitness,
    /// `max |φ_i(x) - φ_i(y)| · r / d(x, y)` over all pairs and centers.
    pub lip: PhiWitness,
    pub overlap: usize,
}

fn cutoff(r: f64, d: f64) -> f64 {
    ((6.0 * r - d) / (3.0 * r)).clamp(0.0, 1.0)
}

pub fn build_partition_of_unity(space: &MetricMeasureSpace, cover: &Cover) -> Result<PartitionOfUnity> {
    let r = cover.r;
    let n = space.len();
    // Centers whose 6r-ball contains each point, in slot order.
    let mut near: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (slot, ball) in cover.balls_6r.iter().enumerate() {
        for &y in ball {
            near[y].push(slot);
        }
    }
    let phi = exec::map_range(n, |x| {
        let psi: Vec<(usize, f64)> = near[x]
            .iter()
            .map(|&slot| (slot, cutoff(r, space.dist(x, cover.centers[slot]))))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        let total: f64 = psi.iter().map(|&(_, v)| v).sum();
        if !(total > 0.0) {
            return Err(Error::Normalization(x));
        }
        Ok(psi.into_iter().map(|(slot, v)| (slot, v / total)).collect::<Vec<_>>())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut nu = PhiWitness {
        value: f64::INFINITY,
        center: 0,
        x: 0,
        y: 0,
    };
    for (slot, ball) in cover.balls_3r.iter().enumerate() {
        for &x in ball {
            let v = phi_at(&phi[x], slot);
            if v < nu.value {
                nu = PhiWitness {
                    value: v,
                    center: slot,
                    x,
                    y: x,
                };
            }
        }
    }

    let per_point = exec::map_range(n, |x| {
        let mut best = PhiWitness {
            value: 0.0,
            center: 0,
            x,
            y: x,
        };
        for y in (x + 1)..n {
            let scale = r / space.dist(x, y);
            merge_diff(&phi[x], &phi[y], |slot, diff| {
                let v = diff * scale;
                if v > best.value {
                    best = PhiWitness {
                        value: v,
                        center: slot,
                        x,
                        y,
                    };
                }
            });
        }
        best
    });
    let mut lip = PhiWitness {
        value: 0.0,
        center: 0,
        x: 0,
        y: 0,
    };
    for w in per_point {
        if w.value > lip.value {
            lip = w;
        }
    }

    Ok(PartitionOfUnity {
        r,
        phi,
        nu,
        lip,
        overlap: overlap_count(space, cover),
    })
}

pub(crate) fn phi_at(row: &[(usize, f64)], slot: usize) -> f64 {
    row.binary_search_by_key(&slot, |&(s, _)| s).map_or(0.0, |i| row[i].1)
}

/// Calls `f(slot, |a_slot - b_slot|)` over the union of both sparse rows.
fn merge_diff(a: &[(usize, f64)], b: &[(usize, f64)], mut f: impl FnMut(usize, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(sa, va)), Some(&(sb, vb))) if sa == sb => {
                f(sa, (va - vb).abs());
                i += 1;
                j += 1;
            }
            (Some(&(sa, va)), Some(&(sb, _))) if sa < sb => {
                f(sa, va);
                i += 1;
            }
            (Some(&(sa, va)), None) => {
                f(sa, va);
                i += 1;
            }
            (_, Some(&(sb, vb))) => {
                f(sb, vb);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}

impl PartitionOfUnity {
    /// Dense value `φ_slot(x)`.
    pub fn value(&self, slot: usize, x: usize) -> f64 {
        phi_at(&self.phi[x], slot)
    }

    /// Rows `center_id,point_id,phi` for every nonzero entry, ordered by
    /// center then point.
    pub fn write_csv(&self, space: &MetricMeasureSpace, cover: &Cover, writer: impl Write) -> Result<()> {
        let mut rows: Vec<(usize, usize, f64)> = self
            .phi
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&(slot, v)| (slot, x, v)))
            .collect();
        rows.sort_by_key(|&(slot, x, _)| (slot, x));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["center_id", "point_id", "phi"])?;
        for (slot, x, v) in rows {
            w.write_record([
                space.labels()[cover.centers[slot]].to_string(),
                space.labels()[x].to_string(),
                v.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{default_labels, Metric};

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
    fn greedy_net_examples() {
        let g = line(5);
        let c = build_cover(&g, 1.5).unwrap();
        assert_eq!(c.centers, vec![0, 2, 4]);
        assert_eq!(overlap_count(&g, &c), 3);

        let two = line(2);
        assert_eq!(build_cover(&two, 2.0).unwrap().centers, vec![0]);
        let big = build_cover(&g, 10.0).unwrap();
        assert_eq!(big.centers, vec![0]);
        assert_eq!(overlap_count(&g, &big), 1);
    }

    #[test]
    fn overlap_on_path_with_alternate_centers() {
        // r = 2 on a unit path gives centers 0, 2, 4, ...; the worst point
        // sees every center within distance < 12.
        let p = line(20);
        let c = build_cover(&p, 2.0).unwrap();
        assert_eq!(c.centers, (0..20).step_by(2).collect::<Vec<_>>());
        let brute = (0..20)
            .map(|x| c.centers.iter().filter(|&&ci| p.dist(x, ci) < 12.0).count())
            .max()
            .unwrap();
        assert_eq!(overlap_count(&p, &c), brute);
    }

    #[test]
    fn partition_examples() {
        let g = line(5);
        let c = build_cover(&g, 1.5).unwrap();
        let pou = build_partition_of_unity(&g, &c).unwrap();
        for slot in 0..3 {
            assert!((pou.value(slot, 2) - 1.0 / 3.0).abs() < 1e-15);
        }
        let single = build_cover(&g, 10.0).unwrap();
        let pou = build_partition_of_unity(&g, &single).unwrap();
        assert!(pou.phi.iter().all(|row| row == &vec![(0, 1.0)]));

        // two centers at equal distance from the middle point
        let three = line(3);
        let c = build_cover(&three, 1.0).unwrap();
        assert_eq!(c.centers, vec![0, 1, 2]);
        let pou = build_partition_of_unity(&three, &c).unwrap();
        assert_eq!(pou.value(0, 1), pou.value(2, 1));
    }

    #[test]
    fn partition_invariants_on_line() {
        let p = line(40);
        for r in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let c = build_cover(&p, r).unwrap();
            let pou = build_partition_of_unity(&p, &c).unwrap();
            for (x, row) in pou.phi.iter().enumerate() {
                let sum: f64 = row.iter().map(|&(_, v)| v).sum();
                assert!((sum - 1.0).abs() <= 1e-12);
                for &(slot, v) in row {
                    assert!(v > 0.0 && v <= 1.0);
                    assert!(p.dist(x, c.centers[slot]) < 6.0 * r);
                }
            }
            assert!(pou.nu.value * pou.overlap as f64 >= 1.0 - 1e-12);
            assert!(pou.lip.value <= 2.0, "r={r} lip={}", pou.lip.value);
        }
    }

    #[test]
    fn csv_rows() {
        let g = line(5);
        let c = build_cover(&g, 1.5).unwrap();
        let pou = build_partition_of_unity(&g, &c).unwrap();
        let mut buf = Vec::new();
        pou.write_csv(&g, &c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("center_id,point_id,phi\n0,0,"));
        assert_eq!(text.lines().count(), 1 + 15);
    }
}
