use serde::{Deserialize, Serialize};

use super::report::{VerificationReport, Witness};
use super::Instance;
use crate::error::{Error, Result};
use crate::exec;
use crate::hajlasz::{besov_norm, hajlasz_norm, triebel_lizorkin_norm, Bound, NormValue};
use crate::maximal::{discrete_fractional_maximal, fractional_maximal};
use crate::norms::lp_norm;
use crate::params::sobolev_exponent;
use crate::solver::SolverStatus;

/// A norm inequality for a maximal operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    /// `‖M_α u‖_{L^{p*}} <= C ‖u‖_{L^p}`, `p* = Qp/(Q - αp)`.
    FractionalLebesgue,
    /// `‖M*_α u‖_{Ṁ^{s+α,p}} <= C ‖u‖_{Ṁ^{s,p}}` for `0 < s+α <= 1`.
    Hajlasz,
    /// `‖M*_α u‖_{Ṁ^{1,q}} <= C ‖u‖_{Ṁ^{s,p}}` for `1 < s+α <= 1 + Q/p`,
    /// `q = Qp/(Q - (s+α-1)p)`.
    HajlaszSobolev,
    /// Homogeneous Triebel–Lizorkin, smoothness `s -> s+α`.
    TriebelLizorkin,
    /// Homogeneous Besov, smoothness `s -> s+α`.
    Besov,
    /// `α = 0` Triebel–Lizorkin; `full` adds the `L^p` norm on both sides.
    TriebelLizorkinMaximal { full: bool },
    /// `α = 0` Besov; `full` adds the `L^p` norm on both sides.
    BesovMaximal { full: bool },
}

impl Boundedness {
    pub const ALL: [Boundedness; 9] = [
        Boundedness::FractionalLebesgue,
        Boundedness::Hajlasz,
        Boundedness::HajlaszSobolev,
        Boundedness::TriebelLizorkin,
        Boundedness::Besov,
        Boundedness::TriebelLizorkinMaximal { full: false },
        Boundedness::TriebelLizorkinMaximal { full: true },
        Boundedness::BesovMaximal { full: false },
        Boundedness::BesovMaximal { full: true },
    ];

    pub fn id(self) -> &'static str {
        match self {
            Boundedness::FractionalLebesgue => "fractional_lebesgue",
            Boundedness::Hajlasz => "hajlasz",
            Boundedness::HajlaszSobolev => "hajlasz_sobolev",
            Boundedness::TriebelLizorkin => "triebel_lizorkin",
            Boundedness::Besov => "besov",
            Boundedness::TriebelLizorkinMaximal { full: false } => "triebel_lizorkin_maximal",
            Boundedness::TriebelLizorkinMaximal { full: true } => "triebel_lizorkin_maximal_full",
            Boundedness::BesovMaximal { full: false } => "besov_maximal",
            Boundedness::BesovMaximal { full: true } => "besov_maximal_full",
        }
    }

    /// Checks the parameter window for a space of dimension `q_dim`.
    fn validate(self, s: f64, alpha: f64, p: f64, q: f64, q_dim: f64) -> Result<()> {
        let sa = s + alpha;
        let low = q_dim / (q_dim + s);
        let fail = |what: String| Err(Error::param(format!("{}: {what}", self.id())));
        match self {
            Boundedness::FractionalLebesgue => {
                if !(p > 1.0 && alpha > 0.0 && alpha < q_dim / p) {
                    return fail(format!("need p > 1 and 0 < alpha < Q/p = {}", q_dim / p));
                }
            }
            Boundedness::Hajlasz => {
                if !(sa > 0.0 && sa <= 1.0 && p > low && p.is_finite()) {
                    return fail(format!("need 0 < s+alpha <= 1 and Q/(Q+s) = {low} < p < inf"));
                }
            }
            Boundedness::HajlaszSobolev => {
                if !(sa > 1.0 && sa <= 1.0 + q_dim / p && p > low && p.is_finite()) {
                    return fail(format!(
                        "need 1 < s+alpha <= 1 + Q/p = {} and Q/(Q+s) = {low} < p < inf",
                        1.0 + q_dim / p
                    ));
                }
            }
            Boundedness::TriebelLizorkin | Boundedness::Besov => {
                if !(sa > 0.0 && sa < 1.0) {
                    return fail("need 0 < s+alpha < 1".into());
                }
            }
            Boundedness::TriebelLizorkinMaximal { .. } | Boundedness::BesovMaximal { .. } => {
                if alpha != 0.0 || !(s > 0.0 && s < 1.0) {
                    return fail("need alpha = 0 and 0 < s < 1".into());
                }
            }
        }
        let tl = matches!(
            self,
            Boundedness::TriebelLizorkin | Boundedness::TriebelLizorkinMaximal { .. }
        );
        let besov = matches!(self, Boundedness::Besov | Boundedness::BesovMaximal { .. });
        let full = matches!(
            self,
            Boundedness::TriebelLizorkinMaximal { full: true } | Boundedness::BesovMaximal { full: true }
        );
        if tl || besov {
            let p_low = if full { 1.0 } else { low };
            if !(p > p_low && p.is_finite()) {
                return fail(format!("need {p_low} < p < inf"));
            }
            let q_low = if tl && full {
                1.0
            } else if tl {
                low
            } else {
                0.0
            };
            if !(q > q_low && q.is_finite()) {
                return fail(format!("need {q_low} < q < inf"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedRow {
    pub space: String,
    pub function: String,
    pub source: f64,
    pub target: f64,
    /// `None` when the instance was skipped.
    pub ratio: Option<f64>,
    pub bound: Bound,
    pub flags: Vec<String>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub case: Boundedness,
    pub s: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub rows: Vec<BoundedRow>,
    pub max_ratio: f64,
    /// Semantics of `max_ratio`, combined over the tested rows.
    pub bound: Bound,
    pub witness: Option<usize>,
}

impl BoundsTable {
    /// Ratios of the tested rows, sorted.
    pub fn ratios(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.rows.iter().filter_map(|row| row.ratio).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    pub fn to_report(&self) -> VerificationReport {
        let mut rep = VerificationReport::new(format!("bounds_{}", self.case.id()), "corpus", "corpus")
            .param("s", self.s)
            .param("alpha", self.alpha)
            .param("p", self.p)
            .param("q", self.q);
        rep.best_constant = self.max_ratio;
        rep.witness = self.witness.map(|i| Witness::Instance {
            index: i,
            id: format!("{}/{}", self.rows[i].space, self.rows[i].function),
        });
        let ratios = self.ratios();
        rep.metric("tested", ratios.len() as f64);
        rep.metric("skipped", (self.rows.len() - ratios.len()) as f64);
        if let (Some(lo), Some(hi)) = (ratios.first(), ratios.last()) {
            rep.metric("min_ratio", *lo);
            rep.metric("median_ratio", ratios[ratios.len() / 2]);
            rep.metric("max_ratio", *hi);
        }
        rep.note(format!("max ratio is {:?}", self.bound).to_lowercase());
        rep.pass = self.max_ratio.is_finite();
        rep
    }
}

fn combine(a: NormValue, b: NormValue) -> (Bound, Vec<String>) {
    let mut flags = a.flags;
    for f in b.flags {
        if !flags.contains(&f) {
            flags.push(f);
        }
    }
    (Bound::ratio(a.bound, b.bound), flags)
}

fn exact(value: f64) -> NormValue {
    NormValue {
        value,
        bound: Bound::Exact,
        status: SolverStatus::Trivial,
        flags: Vec::new(),
    }
}

fn with_lp(mut norm: NormValue, u: &[f64], weights: &[f64], p: f64) -> NormValue {
    norm.value += lp_norm(u, weights, p);
    norm
}

/// `(target norm, source norm)` of one instance.
fn norms(case: Boundedness, inst: &Instance, s: f64, alpha: f64, p: f64, q: f64) -> Result<(NormValue, NormValue)> {
    let ctx = inst.ctx;
    let space = &ctx.space;
    let u = inst.u;
    let w = space.weights();
    if case == Boundedness::FractionalLebesgue {
        let p_star = sobolev_exponent(ctx.q_dim, p, alpha).expect("window checked");
        let m = fractional_maximal(space, u, alpha, &ctx.radii)?;
        return Ok((exact(lp_norm(&m.values, w, p_star)), exact(lp_norm(u, w, p))));
    }
    let f = discrete_fractional_maximal(space, u, alpha, &ctx.family).values;
    let sa = s + alpha;
    Ok(match case {
        Boundedness::FractionalLebesgue => unreachable!(),
        Boundedness::Hajlasz => (hajlasz_norm(space, &f, sa, p)?, hajlasz_norm(space, u, s, p)?),
        Boundedness::HajlaszSobolev => {
            let den = ctx.q_dim - (sa - 1.0) * p;
            let target_q = if den > 0.0 { ctx.q_dim * p / den } else { f64::INFINITY };
            (hajlasz_norm(space, &f, 1.0, target_q)?, hajlasz_norm(space, u, s, p)?)
        }
        Boundedness::TriebelLizorkin | Boundedness::TriebelLizorkinMaximal { full: false } => (
            triebel_lizorkin_norm(space, &f, sa, p, q)?.norm,
            triebel_lizorkin_norm(space, u, s, p, q)?.norm,
        ),
        Boundedness::Besov | Boundedness::BesovMaximal { full: false } => (
            besov_norm(space, &f, sa, p, q)?.norm,
            besov_norm(space, u, s, p, q)?.norm,
        ),
        Boundedness::TriebelLizorkinMaximal { full: true } => (
            with_lp(triebel_lizorkin_norm(space, &f, s, p, q)?.norm, &f, w, p),
            with_lp(triebel_lizorkin_norm(space, u, s, p, q)?.norm, u, w, p),
        ),
        Boundedness::BesovMaximal { full: true } => (
            with_lp(besov_norm(space, &f, s, p, q)?.norm, &f, w, p),
            with_lp(besov_norm(space, u, s, p, q)?.norm, u, w, p),
        ),
    })
}

/// Ratio `target norm / source norm` for each instance and its maximum. The
/// parameter window is checked against every space's `Q`; instances with a
/// vanishing source norm are skipped.
pub fn boundedness_experiment(
    instances: &[Instance],
    case: Boundedness,
    s: f64,
    alpha: f64,
    p: f64,
    q: f64,
) -> Result<BoundsTable> {
    for inst in instances {
        case.validate(s, alpha, p, q, inst.ctx.q_dim)?;
    }
    let rows = exec::map_slice(instances, |inst| -> Result<BoundedRow> {
        let (target, source) = norms(case, inst, s, alpha, p, q)?;
        let mut row = BoundedRow {
            space: inst.ctx.id.clone(),
            function: inst.function.to_string(),
            source: source.value,
            target: target.value,
            ratio: None,
            bound: Bound::Exact,
            flags: Vec::new(),
            skipped: None,
        };
        // Norms of a constant come out as rounding noise, never exactly 0.
        let scale = inst.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(source.value > 1e-12 * scale) {
            row.skipped = Some("source norm vanishes".into());
            return Ok(row);
        }
        let (bound, flags) = combine(target.clone(), source.clone());
        row.ratio = Some(target.value / source.value);
        row.bound = bound;
        row.flags = flags;
        Ok(row)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut max_ratio = 0.0;
    let mut witness = None;
    let mut bound: Option<Bound> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(r) = row.ratio {
            bound = Some(bound.map_or(row.bound, |b| Bound::max_of(b, row.bound)));
            if witness.is_none() || r > max_ratio {
                max_ratio = r;
                witness = Some(i);
            }
        }
    }
    Ok(BoundsTable {
        case,
        s,
        alpha,
        p,
        q,
        rows,
        max_ratio,
        bound: bound.unwrap_or(Bound::Exact),
        witness,
    })
}
