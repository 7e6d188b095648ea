//! Finite metric measure spaces and ball queries.
//!
//! A [`MetricMeasureSpace`] is a finite point set with a metric and a
//! strictly positive weight per point (the measure of the singleton). Ball
//! queries go through a per-point neighbour list sorted by distance, so a
//! ball is a prefix of that list and its measure is a prefix sum.

mod constants;
mod io;

use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constants::{homogeneous_dimension, Estimate, GeometryConstants};
pub use io::{read_function_csv, write_ball_table, write_function_csv, SpaceFile};

/// Spaces up to this size get a dense distance matrix even when described by
/// coordinates.
pub const DEFAULT_MATRIX_LIMIT: usize = 2048;

/// Triangle inequality is audited exhaustively up to this size and by
/// deterministic sampling above it.
pub const DEFAULT_AUDIT_LIMIT: usize = 160;

const AUDIT_SAMPLES: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Metric {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Manhattan => diffs.sum(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

/// Point identifier as it appears in space files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointLabel {
    Int(i64),
    Str(String),
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::Int(i) => write!(f, "{i}"),
            PointLabel::Str(s) => f.write_str(s),
        }
    }
}

/// How the radius sets for suprema over `r` are generated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ScalePolicy {
    /// Every distinct positive pairwise distance.
    DistinctDistances,
    /// `base * 2^(k / 2^refine)` for `k = 0, 1, ...`; `base` defaults to the
    /// minimal gap. `refine = 1` halves the dyadic step.
    Dyadic {
        #[serde(default)]
        base: Option<f64>,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        refine: u32,
    },
}

impl ScalePolicy {
    pub fn dyadic() -> Self {
        ScalePolicy::Dyadic {
            base: None,
            count: None,
            refine: 0,
        }
    }

    /// Same policy with the dyadic step halved; distinct distances are
    /// returned unchanged.
    pub fn refined(self) -> Self {
        match self {
            ScalePolicy::Dyadic { base, count, refine } => ScalePolicy::Dyadic {
                base,
                count: count.map(|c| c * 2),
                refine: refine + 1,
            },
            other => other,
        }
    }
}

#[derive(Clone, Debug)]
struct Coordinates {
    points: Vec<Vec<f64>>,
    metric: Metric,
}

/// Per point: neighbours sorted by `(distance, index)` and the running
/// measure along that order.
struct BallIndex {
    order: Vec<Vec<(f64, usize)>>,
    cum_weight: Vec<Vec<f64>>,
    distinct: Vec<f64>,
}

pub struct MetricMeasureSpace {
    labels: Vec<PointLabel>,
    coords: Option<Coordinates>,
    matrix: Option<Vec<f64>>,
    weights: Vec<f64>,
    diam: f64,
    min_gap: f64,
    index: OnceLock<BallIndex>,
}

impl fmt::Debug for MetricMeasureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricMeasureSpace")
            .field("len", &self.len())
            .field("diam", &self.diam)
            .field("min_gap", &self.min_gap)
            .field("has_coords", &self.coords.is_some())
            .finish()
    }
}

impl Clone for MetricMeasureSpace {
    fn clone(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            coords: self.coords.clone(),
            matrix: self.matrix.clone(),
            weights: self.weights.clone(),
            diam: self.diam,
            min_gap: self.min_gap,
            index: OnceLock::new(),
        }
    }
}

impl MetricMeasureSpace {
    /// Build from an explicit symmetric distance matrix.
    pub fn from_matrix(labels: Vec<PointLabel>, dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpace(format!("distance matrix must be {n}x{n}")));
        }
        let matrix: Vec<f64> = dist.into_iter().flatten().collect();
        Self::assemble(labels, None, Some(matrix), weights, DEFAULT_AUDIT_LIMIT)
    }

    /// Build from coordinates and a named metric.
    pub fn from_coords(
        labels: Vec<PointLabel>,
        coords: Vec<Vec<f64>>,
        metric: Metric,
        weights: Vec<f64>,
    ) -> Result<Self> {
        Self::from_coords_with_limits(
            labels,
            coords,
            metric,
            weights,
            DEFAULT_MATRIX_LIMIT,
            DEFAULT_AUDIT_LIMIT,
        )
    }

    pub fn from_coords_with_limits(
        labels: Vec<PointLabel>,
        coords: Vec<Vec<f64>>,
        metric: Metric,
        weights: Vec<f64>,
        matrix_limit: usize,
        audit_limit: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if coords.len() != n {
            return Err(Error::InvalidSpace(format!(
                "{} coordinate rows for {n} points",
                coords.len()
            )));
        }
        let dim = coords.first().map_or(0, Vec::len);
        if coords.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidSpace("ragged coordinate rows".into()));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpace("non-finite coordinate".into()));
        }
        let coords = Coordinates { points: coords, metric };
        let matrix = (n <= matrix_limit).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = metric.eval(&coords.points[i], &coords.points[j]);
                }
            }
            m
        });
        Self::assemble(labels, Some(coords), matrix, weights, audit_limit)
    }

    /// Unit-weight space with labels `0..n`.
    pub fn from_matrix_unit(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        Self::from_matrix(default_labels(n), dist, vec![1.0; n])
    }

    fn assemble(
        labels: Vec<PointLabel>,
        coords: Option<Coordinates>,
        matrix: Option<Vec<f64>>,
        weights: Vec<f64>,
        audit_limit: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidSpace("space has no points".into()));
        }
        if weights.len() != n {
            return Err(Error::InvalidSpace(format!("{} weights for {n} points", weights.len())));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidSpace(format!(
                "weight of point {i} must be positive and finite, got {}",
                weights[i]
            )));
        }
        let mut space = Self {
            labels,
            coords,
            matrix,
            weights,
            diam: 0.0,
            min_gap: f64::INFINITY,
            index: OnceLock::new(),
        };
        space.check_axioms()?;
        space.audit_triangle(audit_limit)?;
        Ok(space)
    }

    fn check_axioms(&mut self) -> Result<()> {
        let n = self.len();
        let mut diam = 0.0f64;
        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            if self.dist(i, i) != 0.0 {
                return Err(Error::InvalidSpace(format!("d({i},{i}) != 0")));
            }
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                if !d.is_finite() || d <= 0.0 {
                    return Err(Error::InvalidSpace(format!(
                        "d({i},{j}) = {d} must be positive and finite"
                    )));
                }
                if self.dist(j, i) != d {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) != d({j},{i})")));
                }
                diam = diam.max(d);
                min_gap = min_gap.min(d);
            }
        }
        self.diam = diam;
        self.min_gap = min_gap;
        Ok(())
    }

    fn audit_triangle(&self, audit_limit: usize) -> Result<()> {
        let n = self.len();
        let slack = |d: f64| 1e-12 * d.max(1.0);
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let lhs = self.dist(i, k);
            let rhs = self.dist(i, j) + self.dist(j, k);
            if lhs > rhs + slack(rhs) {
                return Err(Error::InvalidSpace(format!(
                    "triangle inequality fails: d({i},{k}) = {lhs} > d({i},{j}) + d({j},{k}) = {rhs}"
                )));
            }
            Ok(())
        };
        if n <= audit_limit {
            for i in 0..n {
                for j in 0..n {
                    for k in (i + 1)..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7269_616e_676c_6500);
            for _ in 0..AUDIT_SAMPLES {
                check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[PointLabel] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_ref().map(|c| c.points.as_slice())
    }

    pub fn metric(&self) -> Option<Metric> {
        self.coords.as_ref().map(|c| c.metric)
    }

    /// Maximal pairwise distance (0 for a single point).
    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Minimal positive pairwise distance (`inf` for a single point).
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        match &self.matrix {
            Some(m) => m[x * self.len() + y],
            None => {
                let c = self.coords.as_ref().expect("coordinates or matrix");
                c.metric.eval(&c.points[x], &c.points[y])
            }
        }
    }

    fn index(&self) -> &BallIndex {
        self.index.get_or_init(|| {
            let n = self.len();
            let rows = crate::exec::map_range(n, |x| {
                let mut row: Vec<(f64, usize)> = (0..n).map(|y| (self.dist(x, y), y)).collect();
                row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut acc = 0.0;
                let cum = row
                    .iter()
                    .map(|&(_, y)| {
                        acc += self.weights[y];
                        acc
                    })
                    .collect::<Vec<_>>();
                (row, cum)
            });
            let (order, cum_weight): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let mut distinct: Vec<f64> = order
                .iter()
                .flat_map(|row| row.iter().map(|&(d, _)| d))
                .filter(|&d| d > 0.0)
                .collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            BallIndex {
                order,
                cum_weight,
                distinct,
            }
        })
    }

    /// Neighbours of `x` sorted by `(distance, index)`; `x` itself comes first.
    pub fn neighbors(&self, x: usize) -> &[(f64, usize)] {
        &self.index().order[x]
    }

    /// Number of points in the ball around `x`; the ball is the prefix of
    /// [`neighbors`](Self::neighbors) of this length.
    pub fn ball_len(&self, x: usize, r: f64, closed: bool) -> usize {
        let row = &self.index().order[x];
        if closed {
            row.partition_point(|&(d, _)| d <= r)
        } else {
            row.partition_point(|&(d, _)| d < r)
        }
    }

    /// `{y : d(x,y) < r}` (open) or `{y : d(x,y) <= r}` (closed), sorted by
    /// index.
    pub fn ball(&self, x: usize, r: f64, closed: bool) -> Vec<usize> {
        let len = self.ball_len(x, r, closed);
        let mut members: Vec<usize> = self.neighbors(x)[..len].iter().map(|&(_, y)| y).collect();
        if members.is_empty() {
            // r <= 0 on an open ball; the centre always belongs to its ball.
            members.push(x);
        }
        members.sort_unstable();
        members
    }

    /// Measure of the ball around `x`.
    pub fn ball_measure(&self, x: usize, r: f64, closed: bool) -> f64 {
        let len = self.ball_len(x, r, closed).max(1);
        self.index().cum_weight[x][len - 1]
    }

    pub fn measure(&self, set: &[usize]) -> f64 {
        set.iter().map(|&y| self.weights[y]).sum()
    }

    /// Integral average of `u` over a point set.
    pub fn average(&self, u: &[f64], set: &[usize]) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptyBall);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &y in set {
            num += u[y] * self.weights[y];
            den += self.weights[y];
        }
        Ok(num / den)
    }

    /// Sorted distinct positive pairwise distances.
    pub fn distinct_distances(&self) -> &[f64] {
        &self.index().distinct
    }

    /// Finite sorted radius set in `(0, r_max]`; `r_max` defaults to the
    /// diameter. Empty for a single point.
    pub fn radius_scale_set(&self, policy: ScalePolicy, r_max: Option<f64>) -> Vec<f64> {
        if self.len() < 2 {
            return Vec::new();
        }
        let r_max = r_max.unwrap_or(self.diam);
        match policy {
            ScalePolicy::DistinctDistances => self
                .distinct_distances()
                .iter()
                .copied()
                .take_while(|&d| d <= r_max)
                .collect(),
            ScalePolicy::Dyadic { base, count, refine } => {
                let base = base.unwrap_or(self.min_gap);
                if !(base > 0.0) {
                    return Vec::new();
                }
                let steps = 1u64 << refine.min(20);
                let limit = count.unwrap_or(usize::MAX);
                let mut out = Vec::new();
                for k in 0u64.. {
                    if out.len() >= limit {
                        break;
                    }
                    let r = if k % steps == 0 {
                        base * 2f64.powi((k / steps) as i32)
                    } else {
                        base * 2f64.powf(k as f64 / steps as f64)
                    };
                    if r > r_max {
                        break;
                    }
                    out.push(r);
                }
                out
            }
        }
    }

    /// Sub-space spanned by `points`, relabelled in the given order.
    pub fn restrict(&self, points: &[usize]) -> Result<Self> {
        let labels = points.iter().map(|&i| self.labels[i].clone()).collect();
        let weights = points.iter().map(|&i| self.weights[i]).collect();
        let dist = points
            .iter()
            .map(|&i| points.iter().map(|&j| self.dist(i, j)).collect())
            .collect();
        Self::from_matrix(labels, dist, weights)
    }
}

pub fn default_labels(n: usize) -> Vec<PointLabel> {
    (0..n as i64).map(PointLabel::Int).collect()
}
