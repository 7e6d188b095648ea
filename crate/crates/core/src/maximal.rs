//! The fractional maximal function, discrete convolutions and the discrete
//! fractional maximal function built from a family of scales.

use serde::{Deserialize, Serialize};

use crate::covering::{build_cover, build_partition_of_unity, Cover, PartitionOfUnity};
use crate::error::{Error, Result};
use crate::exec;
use crate::space::{MetricMeasureSpace, ScalePolicy};

/// Pointwise values of a supremum over scales and, per point, the index
/// (into the radius list or scale family) attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalValues {
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
}

/// Radius set for the standard operator: the scale set of `policy` plus
/// `min_gap / 2`, so that singleton balls are represented, and the cap
/// `r_max` (default: the diameter) itself.
pub fn standard_radii(space: &MetricMeasureSpace, policy: ScalePolicy, r_max: Option<f64>) -> Vec<f64> {
    let mut radii = space.radius_scale_set(policy, r_max);
    if space.len() < 2 {
        return vec![1.0];
    }
    let half = space.min_gap() / 2.0;
    if radii.first().is_none_or(|&r| half < r) {
        radii.insert(0, half);
    }
    let cap = r_max.unwrap_or(space.diam());
    if radii.last().is_some_and(|&r| r < cap) {
        radii.push(cap);
    }
    radii
}

/// `M_α u(x) = max_r r^α ⨍_{B̄(x,r)} |u| dμ` over closed balls at `radii`.
pub fn fractional_maximal(space: &MetricMeasureSpace, u: &[f64], alpha: f64, radii: &[f64]) -> Result<MaximalValues> {
    if radii.is_empty() {
        return Err(Error::param("empty radius set"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::param(format!("alpha must be >= 0, got {alpha}")));
    }
    let weights = space.weights();
    let rows = exec::map_range(space.len(), |x| {
        let nbrs = space.neighbors(x);
        let (mut num, mut den, mut j) = (0.0, 0.0, 0usize);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, &r) in radii.iter().enumerate() {
            while j < nbrs.len() && nbrs[j].0 <= r {
                let y = nbrs[j].1;
                num += u[y].abs() * weights[y];
                den += weights[y];
                j += 1;
            }
            let avg = if j == 0 { u[x].abs() } else { num / den };
            let v = r.powf(alpha) * avg;
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    });
    let (values, argmax) = rows.into_iter().unzip();
    Ok(MaximalValues { values, argmax })
}

#[derive(Clone, Debug)]
pub struct Scale {
    pub cover: Cover,
    pub pou: PartitionOfUnity,
}

#[derive(Clone, Debug)]
pub struct ScaleFamily {
    pub scales: Vec<f64>,
    pub levels: Vec<Scale>,
}

impl ScaleFamily {
    pub fn build(space: &MetricMeasureSpace, scales: &[f64]) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::param("empty scale family"));
        }
        if scales.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("scales must be strictly increasing"));
        }
        let levels = exec::map_slice(scales, |&r| {
            let cover = build_cover(space, r)?;
            let pou = build_partition_of_unity(space, &cover)?;
            Ok(Scale { cover, pou })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scales: scales.to_vec(),
            levels,
        })
    }

    /// Scales from `policy` followed by the cap `r_max` (default: the
    /// diameter); a single-point space gets the scale `1`.
    pub fn from_policy(space: &MetricMeasureSpace, policy: ScalePolicy, r_max: Option<f64>) -> Result<Self> {
        let mut scales = space.radius_scale_set(policy, r_max);
        let cap = r_max.unwrap_or(space.diam());
        if scales.last().is_some_and(|&r| r < cap) {
            scales.push(cap);
        }
        if scales.is_empty() {
            scales.push(1.0);
        }
        Self::build(space, &scales)
    }
}

/// `u_r^α(x) = r^α Σ_i φ_i(x) u_{B(x_i, 3r)}`.
pub fn discrete_convolution(
    space: &MetricMeasureSpace,
    u: &[f64],
    cover: &Cover,
    pou: &PartitionOfUnity,
    alpha: f64,
) -> Vec<f64> {
    let averages: Vec<f64> = cover
        .balls_3r
        .iter()
        .map(|ball| space.average(u, ball).expect("a ball contains its center"))
        .collect();
    let scale = cover.r.powf(alpha);
    exec::map_range(space.len(), |x| {
        let s: f64 = pou.phi[x].iter().map(|&(slot, phi)| phi * averages[slot]).sum();
        scale * s
    })
}

/// `M*_α u(x) = max_j |u|_{r_j}^α(x)` over the scale family.
pub fn discrete_fractional_maximal(
    space: &MetricMeasureSpace,
    u: &[f64],
    alpha: f64,
    family: &ScaleFamily,
) -> MaximalValues {
    let abs: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    let convolutions = exec::map_slice(&family.levels, |lvl| {
        discrete_convolution(space, &abs, &lvl.cover, &lvl.pou, alpha)
    });
    let n = space.len();
    let mut values = vec![f64::NEG_INFINITY; n];
    let mut argmax = vec![0; n];
    for (j, conv) in convolutions.iter().enumerate() {
        for x in 0..n {
            if conv[x] > values[x] {
                values[x] = conv[x];
                argmax[x] = j;
            }
        }
    }
    MaximalValues { values, argmax }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparability {
    /// `min_x M*_α u(x) / M_α u(x)` and the point attaining it.
    pub c_low: f64,
    pub low_point: usize,
    pub c_high: f64,
    pub high_point: usize,
    /// False when `u ≡ 0`, in which case no ratio is defined.
    pub defined: bool,
}

pub fn comparability_report(
    space: &MetricMeasureSpace,
    u: &[f64],
    alpha: f64,
    radii: &[f64],
    family: &ScaleFamily,
) -> Result<Comparability> {
    let standard = fractional_maximal(space, u, alpha, radii)?;
    let discrete = discrete_fractional_maximal(space, u, alpha, family);
    Ok(compare(&standard.values, &discrete.values))
}

pub(crate) fn compare(standard: &[f64], discrete: &[f64]) -> Comparability {
    let mut out = Comparability {
        c_low: f64::INFINITY,
        low_point: 0,
        c_high: 0.0,
        high_point: 0,
        defined: false,
    };
    for (x, (&m, &ms)) in standard.iter().zip(discrete).enumerate() {
        let ratio = match (m > 0.0, ms > 0.0) {
            (true, _) => ms / m,
            (false, true) => f64::INFINITY,
            (false, false) => continue,
        };
        out.defined = true;
        if ratio < out.c_low {
            out.c_low = ratio;
            out.low_point = x;
        }
        if ratio > out.c_high {
            out.c_high = ratio;
            out.high_point = x;
        }
    }
    if !out.defined {
        out.c_low = f64::NAN;
        out.c_high = f64::NAN;
    }
    out
}
