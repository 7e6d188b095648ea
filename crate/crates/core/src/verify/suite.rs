use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{boundedness_experiment, Boundedness, BoundsTable};
use super::fs::fefferman_stein_check;
use super::poincare::{check_fractional_poincare, check_poincare, check_sobolev_poincare, FractionalVariant};
use super::report::VerificationReport;
use super::transfer::{gradient_transfer, sequence_transfer};
use super::{Instance, SpaceContext};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec;
use crate::hajlasz::{canonical_fractional_gradient, canonical_gradient};
use crate::params::SmoothnessParams;
use crate::space::{MetricMeasureSpace, ScalePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Poincare,
    /// Gradient transfer to `M*_α u` for Hajłasz gradients.
    #[serde(rename = "thm33")]
    GradientTransfer,
    /// Gradient transfer for fractional gradient sequences.
    #[serde(rename = "thm43")]
    SequenceTransfer,
    Bounds,
    Fs,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Poincare,
        Suite::GradientTransfer,
        Suite::SequenceTransfer,
        Suite::Bounds,
        Suite::Fs,
    ];
}

/// Exponent overrides; unset fields take each suite's defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub s: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub t: Option<f64>,
    pub eps: Option<f64>,
    pub eps_prime: Option<f64>,
    pub delta: Option<f64>,
    /// Scale policy of the maximal operators; dyadic by default.
    pub policy: Option<ScalePolicy>,
}

impl SuiteConfig {
    fn policy(&self) -> ScalePolicy {
        self.policy.unwrap_or_else(ScalePolicy::dyadic)
    }

    fn apply(&self, mut prm: SmoothnessParams) -> SmoothnessParams {
        if let Some(t) = self.t {
            prm.t = t;
        }
        if let Some(e) = self.eps {
            prm.eps = e;
        }
        if let Some(e) = self.eps_prime {
            prm.eps_prime = e;
        }
        if let Some(d) = self.delta {
            prm.delta = d;
        }
        prm
    }

    /// Rejects exponents outside the windows of the requested suites
    /// before any work is done.
    pub fn validate(&self, suites: &[Suite]) -> Result<()> {
        for (name, v) in [
            ("s", self.s),
            ("alpha", self.alpha),
            ("p", self.p),
            ("q", self.q),
            ("t", self.t),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || v.is_nan() {
                    return Err(Error::param(format!("{name} must be >= 0, got {v}")));
                }
            }
        }
        if suites.contains(&Suite::SequenceTransfer) {
            // The window does not depend on Q except through t, which is
            // checked per space.
            let prm = self.sequence_params(f64::INFINITY);
            let mut probe = prm;
            probe.t = f64::INFINITY;
            probe.validate_sequence_transfer(1.0)?;
        }
        if suites.contains(&Suite::Fs) {
            let (p, q) = (self.p.unwrap_or(2.0), self.q.unwrap_or(2.0));
            if !(p > 1.0 && q > 1.0) {
                return Err(Error::param(format!("need p, q > 1, got p = {p}, q = {q}")));
            }
        }
        Ok(())
    }

    fn sequence_params(&self, q_dim: f64) -> SmoothnessParams {
        let s = self.s.unwrap_or(0.5);
        let alpha = self.alpha.unwrap_or(0.3);
        let p = self.p.unwrap_or(2.0);
        let q = self.q.unwrap_or(2.0);
        let q_dim = if q_dim.is_finite() { q_dim } else { 1.0 };
        self.apply(SmoothnessParams::triebel_lizorkin_defaults(s, alpha, p, q, q_dim))
    }
}

/// `(s, α)` pairs exercised by the gradient transfer: both branches.
pub const TRANSFER_PAIRS: [(f64, f64); 3] = [(0.5, 0.3), (1.0, 0.0), (0.8, 0.5)];

/// `(p, q)` pairs of the vector-valued maximal check.
pub const FS_EXPONENTS: [(f64, f64); 2] = [(2.0, 2.0), (1.5, 3.0)];

/// Radii `2^-k` from the largest power of two not above the minimal gap up
/// to the diameter: the radius grid of the Poincaré checks. Being anchored
/// at powers of two, it is shared by refinements of one domain.
pub fn power_of_two_radii(space: &MetricMeasureSpace) -> Vec<f64> {
    if space.len() < 2 {
        return vec![1.0];
    }
    let base = 2f64.powi(space.min_gap().log2().floor() as i32);
    space.radius_scale_set(
        ScalePolicy::Dyadic {
            base: Some(base),
            count: None,
            refine: 0,
        },
        None,
    )
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SuiteOutput {
    pub reports: Vec<VerificationReport>,
    pub tables: Vec<BoundsTable>,
    /// Instances or checks not run, with the reason.
    pub skipped: Vec<String>,
}

impl SuiteOutput {
    fn extend(&mut self, other: SuiteOutput) {
        self.reports.extend(other.reports);
        self.tables.extend(other.tables);
        self.skipped.extend(other.skipped);
    }
}

/// Contexts for every corpus space.
pub fn contexts(corpus: &Corpus, policy: ScalePolicy) -> Result<Vec<SpaceContext>> {
    exec::map_slice(&corpus.spaces, |ns| {
        SpaceContext::new(ns.id.clone(), ns.space.clone(), policy)
    })
    .into_iter()
    .collect()
}

fn instances<'a>(corpus: &'a Corpus, ctxs: &'a [SpaceContext]) -> Vec<Instance<'a>> {
    corpus
        .functions
        .iter()
        .map(|f| Instance {
            ctx: &ctxs[f.space],
            function: &f.id,
            u: &f.values,
        })
        .collect()
}

fn named(mut rep: VerificationReport, inst: &Instance) -> VerificationReport {
    rep.space = inst.ctx.id.clone();
    rep.function = inst.function.to_string();
    rep
}

pub fn run_suite(corpus: &Corpus, suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutput> {
    cfg.validate(&[suite])?;
    let ctxs = contexts(corpus, cfg.policy())?;
    let insts = instances(corpus, &ctxs);
    match suite {
        Suite::Poincare => poincare_suite(&insts, cfg),
        Suite::GradientTransfer => transfer_suite(&insts, cfg),
        Suite::SequenceTransfer => sequence_suite(&insts, cfg),
        Suite::Bounds => bounds_suite(&insts, cfg),
        Suite::Fs => fs_suite(corpus.seed, &ctxs, cfg),
    }
}

pub fn run_all(corpus: &Corpus, cfg: &SuiteConfig) -> Result<SuiteOutput> {
    cfg.validate(&Suite::ALL)?;
    let mut out = SuiteOutput::default();
    for suite in Suite::ALL {
        out.extend(run_suite(corpus, suite, cfg)?);
    }
    Ok(out)
}

fn collect(rows: Vec<Result<SuiteOutput>>) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

fn poincare_suite(insts: &[Instance], cfg: &SuiteConfig) -> Result<SuiteOutput> {
    let s = cfg.s.unwrap_or(0.5);
    let p = cfg.p.unwrap_or(1.0);
    collect(exec::map_slice(insts, |inst| -> Result<SuiteOutput> {
        let space = &inst.ctx.space;
        let q_dim = inst.ctx.q_dim;
        let radii = power_of_two_radii(space);
        let g = canonical_gradient(space, inst.u, s).g;
        let mut out = SuiteOutput::default();
        out.reports
            .push(named(check_poincare(space, inst.u, &g, s, p, &radii)?, inst));
        match check_sobolev_poincare(space, inst.u, &g, s, p, q_dim, &radii) {
            Ok(rep) => out.reports.push(named(rep, inst)),
            Err(Error::Parameter(msg)) => out
                .skipped
                .push(format!("sobolev_poincare {}/{}: {msg}", inst.ctx.id, inst.function)),
            Err(e) => return Err(e),
        }
        let seq = canonical_fractional_gradient(space, inst.u, s);
        let prm = cfg.apply(SmoothnessParams::triebel_lizorkin_defaults(s, 0.0, p, p, q_dim));
        let mean = check_fractional_poincare(space, inst.u, &seq, p, prm.eps, prm.eps_prime, FractionalVariant::Mean)?;
        out.reports.push(named(mean, inst));
        let variant = FractionalVariant::InfOverConstants { q_dim };
        match check_fractional_poincare(space, inst.u, &seq, p, prm.eps, prm.eps_prime, variant) {
            Ok(rep) => out.reports.push(named(rep, inst)),
            Err(Error::Parameter(msg)) => out.skipped.push(format!(
                "fractional_sobolev_poincare {}/{}: {msg}",
                inst.ctx.id, inst.function
            )),
            Err(e) => return Err(e),
        }
        Ok(out)
    }))
}

fn transfer_suite(insts: &[Instance], cfg: &SuiteConfig) -> Result<SuiteOutput> {
    let pairs: Vec<(f64, f64)> = match (cfg.s, cfg.alpha) {
        (None, None) => TRANSFER_PAIRS.to_vec(),
        (s, a) => vec![(s.unwrap_or(0.5), a.unwrap_or(0.0))],
    };
    let p = cfg.p.unwrap_or(2.0);
    collect(exec::map_slice(insts, |inst| -> Result<SuiteOutput> {
        let mut out = SuiteOutput::default();
        for &(s, alpha) in &pairs {
            let g = canonical_gradient(&inst.ctx.space, inst.u, s).g;
            let prm = cfg.apply(SmoothnessParams::hajlasz_defaults(s, alpha, p, inst.ctx.q_dim));
            let tr = gradient_transfer(inst.ctx, inst.u, &g, &prm)?;
            out.reports.push(named(tr.report, inst));
        }
        Ok(out)
    }))
}

fn sequence_suite(insts: &[Instance], cfg: &SuiteConfig) -> Result<SuiteOutput> {
    collect(exec::map_slice(insts, |inst| -> Result<SuiteOutput> {
        let prm = cfg.sequence_params(inst.ctx.q_dim);
        let seq = canonical_fractional_gradient(&inst.ctx.space, inst.u, prm.s);
        let mut out = SuiteOutput::default();
        if seq.levels.is_empty() {
            out.skipped.push(format!(
                "sequence_transfer {}/{}: single point",
                inst.ctx.id, inst.function
            ));
            return Ok(out);
        }
        let tr = sequence_transfer(inst.ctx, inst.u, &seq, &prm)?;
        out.reports.push(named(tr.report, inst));
        Ok(out)
    }))
}

/// Exponents `(s, α, p, q)` of each boundedness table.
pub fn bounds_parameters(case: Boundedness) -> (f64, f64, f64, f64) {
    match case {
        Boundedness::FractionalLebesgue => (0.0, 0.3, 2.0, 2.0),
        Boundedness::Hajlasz => (0.5, 0.3, 2.0, 2.0),
        Boundedness::HajlaszSobolev => (0.8, 0.5, 2.0, 2.0),
        Boundedness::TriebelLizorkin | Boundedness::Besov => (0.5, 0.3, 2.0, 3.0),
        Boundedness::TriebelLizorkinMaximal { .. } | Boundedness::BesovMaximal { .. } => (0.5, 0.0, 2.0, 3.0),
    }
}

fn bounds_suite(insts: &[Instance], cfg: &SuiteConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    for case in Boundedness::ALL {
        let (s, alpha, p, q) = bounds_parameters(case);
        let (s, alpha, p, q) = (
            cfg.s.unwrap_or(s),
            cfg.alpha.unwrap_or(alpha),
            cfg.p.unwrap_or(p),
            cfg.q.unwrap_or(q),
        );
        let table = boundedness_experiment(insts, case, s, alpha, p, q)?;
        for row in table.rows.iter().filter(|r| r.skipped.is_some()) {
            out.skipped.push(format!(
                "bounds_{} {}/{}: {}",
                case.id(),
                row.space,
                row.function,
                row.skipped.as_deref().unwrap_or("")
            ));
        }
        out.reports.push(table.to_report());
        out.tables.push(table);
    }
    Ok(out)
}

/// `count` random sequences of `levels` levels with values in `[0, 1)`,
/// seeded by the corpus seed and the space id.
pub fn random_sequences(seed: u64, space_id: &str, n: usize, levels: usize, count: usize) -> Vec<Vec<Vec<f64>>> {
    use sha2::{Digest, Sha256};
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(b"sequences")
        .chain_update(space_id.as_bytes())
        .chain_update((levels as u64).to_le_bytes())
        .finalize();
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")));
    (0..count)
        .map(|_| {
            (0..levels)
                .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
                .collect()
        })
        .collect()
}

fn fs_suite(seed: u64, ctxs: &[SpaceContext], cfg: &SuiteConfig) -> Result<SuiteOutput> {
    let exps: Vec<(f64, f64)> = match (cfg.p, cfg.q) {
        (None, None) => FS_EXPONENTS.to_vec(),
        (p, q) => vec![(p.unwrap_or(2.0), q.unwrap_or(2.0))],
    };
    collect(exec::map_slice(ctxs, |ctx| -> Result<SuiteOutput> {
        let mut out = SuiteOutput::default();
        for levels in [1usize, 3] {
            let seqs = random_sequences(seed, &ctx.id, ctx.space.len(), levels, 8);
            for &(p, q) in &exps {
                let mut rep = fefferman_stein_check(ctx, &seqs, p, q)?;
                rep.function = format!("random_{levels}_level");
                out.reports.push(rep);
            }
        }
        Ok(out)
    }))
}
