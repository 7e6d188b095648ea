//! `fracmax`: build spaces, evaluate maximal operators and smoothness norms,
//! and run the inequality verification suites.
//!
//! Exit status: 0 success, 1 internal error, 2 usage, 3 I/O, 4 malformed
//! input, 5 parameter out of range, 6 solver failure, 7 verification failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracmax::corpus::{generate_space, Corpus, CorpusSpec, SpaceSpec};
use fracmax::covering::{build_cover, build_partition_of_unity};
use fracmax::hajlasz::{
    besov_norm, full_hajlasz_norm, hajlasz_norm, is_fractional_gradient, is_hajlasz_gradient, optimal_gradient,
    triebel_lizorkin_norm, GradientCheck, NormValue,
};
use fracmax::maximal::{discrete_fractional_maximal, fractional_maximal, standard_radii, ScaleFamily};
use fracmax::norms::lp_norm;
use fracmax::space::{read_function_csv, write_ball_table};
use fracmax::verify::{run_all, run_suite, Suite, SuiteConfig};
use fracmax::{MetricMeasureSpace, ScalePolicy};
use serde::Serialize;
use serde_json::json;

use error::{CliError, CliResult};
use output::{write_json, write_reports, RunManifest, SCHEMA_VERSION};

/// Feasibility tolerance for re-checking computed minimisers.
const DEFAULT_TOL: f64 = 1e-10;
const TOL_ENV: &str = "FRACMAX_TOL";

#[derive(Parser)]
#[command(
    name = "fracmax",
    version,
    about = "Fractional maximal operators on finite metric measure spaces"
)]
struct Cli {
    /// Run sequentially in the reference mode (bit-reproducible output).
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect a space file.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Build the scale-r covering and its partition of unity.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Evaluate a fractional maximal operator.
    Maxfn(MaxfnArgs),
    /// Compute a Hajłasz, Besov or Triebel-Lizorkin norm.
    Norm(NormArgs),
    /// Run verification suites over a corpus.
    Verify(VerifyArgs),
    /// Generate corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Generate a space from a JSON space spec.
    Build {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a summary of a space file as JSON.
    Inspect {
        #[arg(long = "in")]
        input: PathBuf,
        /// Include the doubling constant, Q and the lower-mass constant.
        #[arg(long)]
        constants: bool,
        #[arg(long, value_enum, default_value_t = Scales::Dyadic)]
        scales: Scales,
        /// Write the ball size/measure table at the scale set.
        #[arg(long)]
        balls: Option<PathBuf>,
        #[arg(long)]
        closed: bool,
    },
}

#[derive(Subcommand)]
enum CoverCmd {
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: f64,
        /// Write `center_id,point_id,phi` rows.
        #[arg(long)]
        dump_phi: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scales {
    Dyadic,
    Distances,
}

impl Scales {
    fn policy(self) -> ScalePolicy {
        match self {
            Scales::Dyadic => ScalePolicy::dyadic(),
            Scales::Distances => ScalePolicy::DistinctDistances,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Standard,
    Discrete,
}

#[derive(Args)]
struct MaxfnArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Operator::Standard)]
    op: Operator,
    #[arg(long, value_enum, default_value_t = Scales::Dyadic)]
    scales: Scales,
    /// Largest scale; defaults to the diameter.
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    u: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Hajlasz,
    Besov,
    Tl,
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    u: PathBuf,
    #[arg(long, value_enum)]
    kind: NormKind,
    #[arg(long)]
    s: f64,
    /// Integrability exponent; `inf` is accepted.
    #[arg(long)]
    p: f64,
    /// Level exponent of Besov and Triebel-Lizorkin norms.
    #[arg(long)]
    q: Option<f64>,
    /// Add `‖u‖_p` (inhomogeneous norm).
    #[arg(long)]
    full: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SuiteArg {
    Poincare,
    /// Pointwise gradient transfer for Hajłasz gradients.
    Thm33,
    /// Gradient transfer for fractional gradient sequences.
    Thm43,
    Bounds,
    Fs,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// Built-in corpus name, corpus directory or corpus spec JSON.
    #[arg(long)]
    corpus: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Scales::Dyadic)]
    scales: Scales,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_prime: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Write a corpus directory from a spec file or a built-in name.
    Make {
        #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
        spec: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.deterministic {
        fracmax::exec::set_reference_mode(true);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracmax: {e}");
            e.exit()
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Space(cmd) => space(cmd),
        Command::Cover(CoverCmd::Build { input, r, dump_phi }) => cover(&input, r, dump_phi.as_deref()),
        Command::Maxfn(args) => maxfn(args),
        Command::Norm(args) => norm(args),
        Command::Verify(args) => verify(args),
        Command::Corpus(CorpusCmd::Make { spec, builtin, out }) => corpus_make(spec, builtin, &out),
    }
}

fn tolerance() -> CliResult<f64> {
    match std::env::var(TOL_ENV) {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
            _ => Err(fracmax::Error::Parameter(format!("{TOL_ENV} must be a finite number >= 0, got {text:?}")).into()),
        },
        Err(_) => Ok(DEFAULT_TOL),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

fn load_space(path: &Path) -> CliResult<MetricMeasureSpace> {
    Ok(MetricMeasureSpace::from_reader(read_text(path)?.as_bytes())?)
}

fn load_function(space: &MetricMeasureSpace, path: &Path) -> CliResult<Vec<f64>> {
    Ok(read_function_csv(space, read_text(path)?.as_bytes())?)
}

fn create(path: &Path) -> CliResult<fs::File> {
    fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))
}

fn print_json(value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(fracmax::Error::from)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::io("writing stdout", e))
}

fn space(cmd: SpaceCmd) -> CliResult<()> {
    match cmd {
        SpaceCmd::Build { spec, seed, out } => {
            let spec: SpaceSpec = serde_json::from_str(&read_text(&spec)?)
                .map_err(|e| fracmax::Error::Format(format!("{}: {e}", spec.display())))?;
            let space = generate_space(&spec, seed)?;
            space.to_writer(create(&out)?)?;
            Ok(())
        }
        SpaceCmd::Inspect {
            input,
            constants,
            scales,
            balls,
            closed,
        } => {
            let space = load_space(&input)?;
            let policy = scales.policy();
            if let Some(path) = balls {
                let radii = standard_radii(&space, policy, None);
                write_ball_table(&space, &radii, closed, create(&path)?)?;
            }
            let constants = if constants {
                Some(space.geometry_constants(policy)?)
            } else {
                None
            };
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "points": space.len(),
                "diam": space.diam(),
                "min_gap": space.min_gap(),
                "total_measure": space.total_measure(),
                "distinct_distances": space.distinct_distances().len(),
                "constants": constants,
            }))
        }
    }
}

fn cover(input: &Path, r: f64, dump_phi: Option<&Path>) -> CliResult<()> {
    let space = load_space(input)?;
    let cover = build_cover(&space, r)?;
    let pou = build_partition_of_unity(&space, &cover)?;
    if let Some(path) = dump_phi {
        pou.write_csv(&space, &cover, create(path)?)?;
    }
    let labels: Vec<String> = cover.centers.iter().map(|&c| space.labels()[c].to_string()).collect();
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "r": r,
        "centers": labels,
        "overlap": pou.overlap,
        "min_phi_on_3r_balls": pou.nu.value,
        "lipschitz_times_r": pou.lip.value,
    }))
}

fn maxfn(args: MaxfnArgs) -> CliResult<()> {
    let space = load_space(&args.input)?;
    let u = load_function(&space, &args.u)?;
    let policy = args.scales.policy();
    let (values, scale_of): (Vec<f64>, Vec<f64>) = match args.op {
        Operator::Standard => {
            let radii = standard_radii(&space, policy, args.r_max);
            let m = fractional_maximal(&space, &u, args.alpha, &radii)?;
            (m.values, m.argmax.iter().map(|&i| radii[i]).collect())
        }
        Operator::Discrete => {
            if !(args.alpha >= 0.0) {
                return Err(fracmax::Error::Parameter(format!("alpha must be >= 0, got {}", args.alpha)).into());
            }
            let family = ScaleFamily::from_policy(&space, policy, args.r_max)?;
            let m = discrete_fractional_maximal(&space, &u, args.alpha, &family);
            (m.values, m.argmax.iter().map(|&i| family.scales[i]).collect())
        }
    };
    let mut w = csv::Writer::from_writer(create(&args.out)?);
    let csv_err = |e: csv::Error| CliError::from(fracmax::Error::from(e));
    w.write_record(["point", "value", "scale"]).map_err(csv_err)?;
    for ((label, v), r) in space.labels().iter().zip(&values).zip(&scale_of) {
        w.write_record([label.to_string(), v.to_string(), r.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("writing {}", args.out.display()), e))
}

#[derive(Serialize)]
struct NormReport<'a> {
    schema_version: u32,
    kind: &'a str,
    s: f64,
    #[serde(serialize_with = "real")]
    p: f64,
    #[serde(serialize_with = "real_opt")]
    q: Option<f64>,
    full: bool,
    #[serde(serialize_with = "real")]
    value: f64,
    norm: NormValue,
    minimizer: serde_json::Value,
    feasibility: GradientCheck,
    tolerance: f64,
}

fn real<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if v.is_nan() {
            "nan"
        } else if *v > 0.0 {
            "inf"
        } else {
            "-inf"
        })
    }
}

fn real_opt<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => real(v, s),
        None => s.serialize_none(),
    }
}

fn norm(args: NormArgs) -> CliResult<()> {
    let tol = tolerance()?;
    let space = load_space(&args.space)?;
    let u = load_function(&space, &args.u)?;
    let need_q = || {
        args.q
            .ok_or_else(|| CliError::Usage("--q is required for besov and tl norms".into()))
    };
    let (kind, norm, minimizer, check) = match args.kind {
        NormKind::Hajlasz => {
            let norm = if args.full {
                full_hajlasz_norm(&space, &u, args.s, args.p)?
            } else {
                hajlasz_norm(&space, &u, args.s, args.p)?
            };
            let (g, _) = optimal_gradient(&space, &u, args.s, args.p)?;
            let check = is_hajlasz_gradient(&space, &u, &g.g, args.s, tol);
            ("hajlasz", norm, json!({ "g": g.g }), check)
        }
        NormKind::Besov | NormKind::Tl => {
            let q = need_q()?;
            let (kind, mut sol) = match args.kind {
                NormKind::Besov => ("besov", besov_norm(&space, &u, args.s, args.p, q)?),
                _ => ("tl", triebel_lizorkin_norm(&space, &u, args.s, args.p, q)?),
            };
            if args.full {
                sol.norm.value += lp_norm(&u, space.weights(), args.p);
            }
            let check = is_fractional_gradient(&space, &u, &sol.sequence, args.s, tol)?;
            let seq = serde_json::to_value(&sol.sequence).map_err(fracmax::Error::from)?;
            (kind, sol.norm, seq, check)
        }
    };
    let report = NormReport {
        schema_version: SCHEMA_VERSION,
        kind,
        s: args.s,
        p: args.p,
        q: args.q,
        full: args.full,
        value: norm.value,
        norm,
        minimizer,
        feasibility: check,
        tolerance: tol,
    };
    write_json(&args.out, &report)?;
    if !check.ok {
        return Err(fracmax::Error::Solver(format!(
            "minimiser violates a constraint by {} (tolerance {tol})",
            check.worst_violation
        ))
        .into());
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> CliResult<()> {
    let cfg = SuiteConfig {
        s: args.s,
        alpha: args.alpha,
        p: args.p,
        q: args.q,
        t: args.t,
        eps: args.eps,
        eps_prime: args.eps_prime,
        delta: args.delta,
        policy: Some(args.scales.policy()),
    };
    let (name, suites): (&str, Vec<Suite>) = match args.suite {
        SuiteArg::Poincare => ("poincare", vec![Suite::Poincare]),
        SuiteArg::Thm33 => ("thm33", vec![Suite::GradientTransfer]),
        SuiteArg::Thm43 => ("thm43", vec![Suite::SequenceTransfer]),
        SuiteArg::Bounds => ("bounds", vec![Suite::Bounds]),
        SuiteArg::Fs => ("fs", vec![Suite::Fs]),
        SuiteArg::All => ("all", Suite::ALL.to_vec()),
    };
    // Reject parameter windows before touching the corpus.
    cfg.validate(&suites)?;
    let corpus = open_corpus(&args.corpus)?;
    let out = if args.suite == SuiteArg::All {
        run_all(&corpus, &cfg)?
    } else {
        run_suite(&corpus, suites[0], &cfg)?
    };
    let files = write_reports(&args.out, &out)?;
    let failed: Vec<String> = out
        .reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {}/{}", r.inequality, r.space, r.function))
        .collect();
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        suite: name,
        corpus_seed: corpus.seed,
        corpus_fingerprint: corpus.fingerprint(),
        config: &cfg,
        files,
        skipped: &out.skipped,
        failed: failed.clone(),
    };
    write_json(&args.out.join("run.json"), &manifest)?;
    eprintln!(
        "fracmax: {} reports, {} failed, {} skipped",
        out.reports.len(),
        failed.len(),
        out.skipped.len()
    );
    if !failed.is_empty() {
        return Err(CliError::Verification(failed.join("; ")));
    }
    Ok(())
}

fn open_corpus(source: &str) -> CliResult<Corpus> {
    if CorpusSpec::builtin(source).is_none() && !Path::new(source).exists() {
        return Err(CliError::io(
            format!("opening corpus {source:?}"),
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a built-in corpus, file or directory"),
        ));
    }
    Ok(Corpus::open(source)?)
}

fn corpus_make(spec: Option<PathBuf>, builtin: Option<String>, out: &Path) -> CliResult<()> {
    let spec = match (spec, builtin) {
        (Some(path), _) => serde_json::from_str(&read_text(&path)?)
            .map_err(|e| fracmax::Error::Format(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => CorpusSpec::builtin(&name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown built-in corpus {name:?}; available: {}",
                CorpusSpec::BUILTINS.join(", ")
            ))
        })?,
        (None, None) => return Err(CliError::Usage("give --spec or --builtin".into())),
    };
    let corpus = Corpus::generate(&spec)?;
    corpus.write_dir(out)?;
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "spaces": corpus.spaces.len(),
        "functions": corpus.functions.len(),
        "fingerprint": corpus.fingerprint(),
    }))
}
