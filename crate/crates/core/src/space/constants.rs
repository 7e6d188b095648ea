use serde::{Deserialize, Serialize};

use super::{MetricMeasureSpace, ScalePolicy};
use crate::error::{Error, Result};

/// An extremal value together with the `(point, radius)` pair attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub point: usize,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub c_d: f64,
    pub q: f64,
    pub c_l: Option<f64>,
    pub radius_grid: Vec<f64>,
    pub doubling_witness: Option<Estimate>,
    pub lower_mass_witness: Option<Estimate>,
}

/// `Q = log2(c_d)`.
pub fn homogeneous_dimension(c_d: f64) -> Result<f64> {
    if !(c_d >= 1.0) || !c_d.is_finite() {
        return Err(Error::param(format!("doubling constant must be >= 1, got {c_d}")));
    }
    Ok(c_d.log2())
}

impl MetricMeasureSpace {
    /// `max_{x, r} μ(B(x,2r)) / μ(B(x,r))` over the given radii. Returns 1
    /// with no witness when the grid is empty or the space is a single point.
    pub fn estimate_doubling_constant(&self, radii: &[f64], closed: bool) -> (f64, Option<Estimate>) {
        let per_point = crate::exec::map_range(self.len(), |x| {
            let mut best: Option<Estimate> = None;
            for &r in radii {
                let ratio = self.ball_measure(x, 2.0 * r, closed) / self.ball_measure(x, r, closed);
                if best.is_none_or(|b| ratio > b.value) {
                    best = Some(Estimate {
                        value: ratio,
                        point: x,
                        radius: r,
                    });
                }
            }
            best
        });
        let mut best: Option<Estimate> = None;
        for e in per_point.into_iter().flatten() {
            if best.is_none_or(|b| e.value > b.value) {
                best = Some(e);
            }
        }
        match best {
            Some(b) if b.value >= 1.0 => (b.value, Some(b)),
            _ => (1.0, None),
        }
    }

    /// Radii at which the open-ball doubling ratio can change: every
    /// distinct distance and its half. The ratio is constant on each
    /// interval `(a, b]` between consecutive breakpoints, so the maximum over
    /// this grid is the supremum over all `r > 0`.
    pub fn doubling_breakpoints(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = self.distinct_distances().iter().flat_map(|&d| [d, d / 2.0]).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }

    /// `min_{x, r} μ(B(x,r)) / r^Q` over closed balls at the given radii.
    pub fn estimate_lower_mass_constant(&self, q: f64, radii: &[f64]) -> Result<Estimate> {
        if !(q >= 0.0) {
            return Err(Error::param(format!("Q must be >= 0, got {q}")));
        }
        let radii: Vec<f64> = radii
            .iter()
            .copied()
            .filter(|&r| r > 0.0 && (self.len() == 1 || r <= self.diam()))
            .collect();
        if radii.is_empty() {
            return Err(Error::param("lower-mass estimate needs a radius in (0, diam]"));
        }
        let per_point = crate::exec::map_range(self.len(), |x| {
            let mut best = Estimate {
                value: f64::INFINITY,
                point: x,
                radius: radii[0],
            };
            for &r in &radii {
                let ratio = self.ball_measure(x, r, true) / r.powf(q);
                if ratio < best.value {
                    best = Estimate {
                        value: ratio,
                        point: x,
                        radius: r,
                    };
                }
            }
            best
        });
        let mut best = per_point[0];
        for e in per_point.into_iter().skip(1) {
            if e.value < best.value {
                best = e;
            }
        }
        Ok(best)
    }

    /// Doubling constant over the exact breakpoint grid (open balls), `Q`,
    /// and the lower-mass constant over the radii of `policy`.
    pub fn geometry_constants(&self, policy: ScalePolicy) -> Result<GeometryConstants> {
        let breakpoints = self.doubling_breakpoints();
        let (c_d, doubling_witness) = self.estimate_doubling_constant(&breakpoints, false);
        let q = homogeneous_dimension(c_d)?;
        let mut radius_grid = self.radius_scale_set(policy, None);
        if radius_grid.is_empty() {
            radius_grid.push(1.0);
        }
        let lower = self.estimate_lower_mass_constant(q, &radius_grid)?;
        Ok(GeometryConstants {
            c_d,
            q,
            c_l: Some(lower.value),
            radius_grid,
            doubling_witness,
            lower_mass_witness: Some(lower),
        })
    }
}
