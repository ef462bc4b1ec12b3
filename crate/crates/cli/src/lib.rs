//! Command-line front end: argument parsing, command dispatch, exit codes.

pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use quasinil::coeffs::{decay_profile, g_eval, sigma_table, QuadParams};
use quasinil::moments::{
    mixed_moment_check, moment_charfn, moment_combinatorial, moment_dense_oracle, rademacher_moment,
};
use quasinil::operators::power_norms;
use quasinil::sampler::{default_level, sample_series};
use quasinil::scalar::{fmt_rational, parse_rational};
use quasinil::subspace::ratio_profile;
use quasinil::{Caps, CoefficientSpec, CountTable, MomentReport, MomentTarget, PQWord};
use serde::Serialize;

use crate::output::{Artifact, CsvTable, RunOutput};
use crate::verify::{run_suite, Fault, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// A check that ran and did not hold.
#[derive(Debug, thiserror::Error)]
#[error("verification failed: {0}")]
pub struct VerificationFailed(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "quasinil",
    version,
    about = "Truncated quasinilpotent operators: moments, norms, counts, identities"
)]
pub struct Cli {
    /// Directory for result files and the run manifest; without it the
    /// primary table goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Op {
    #[value(name = "X")]
    X,
    #[value(name = "Y")]
    Y,
    Re,
    Im,
    #[value(name = "AstarA")]
    AstarA,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Combinatorial,
    Dense,
    Charfn,
    Rademacher,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of γ, α and s_p(k) over the partitions of p.
    Partitions {
        #[arg(long)]
        p: usize,
    },
    /// One moment of X, Y, Re A, Im A, A*A or a mixed word, by one or all routes.
    Moments {
        /// Coefficient spec, `geometric:p/q`, `list:c1,c2,...`, JSON, or `@file`.
        #[arg(long)]
        coeffs: String,
        #[arg(long, value_enum)]
        op: Op,
        /// Power (`p` for AstarA, `n` in a^n b^m for mixed).
        #[arg(long)]
        order: usize,
        /// `m` in a^n b^m for mixed.
        #[arg(long)]
        order2: Option<usize>,
        #[arg(long, value_enum, default_value = "combinatorial")]
        method: Method,
        /// Truncation level; the combinatorial route uses the whole sequence without it.
        #[arg(long = "N")]
        level: Option<usize>,
        /// Target error for the characteristic-function route.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Run the dense oracle in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Truncated σ_k with tail bounds and (k! σ_k)^(1/k).
    Sigma {
        #[arg(long)]
        coeffs: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long = "N")]
        level: usize,
    },
    /// ‖A_N^k‖ by power iteration against the bound k! σ_k.
    Norms {
        #[arg(long)]
        coeffs: String,
        #[arg(long = "N")]
        level: usize,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
    },
    /// τ(R_m w)/τ(R_m) and its 2m-th root for a word over {P, Q}.
    Ratio {
        #[arg(long)]
        word: String,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        mmax: usize,
    },
    /// Runs a suite of exact identity checks.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Monte Carlo samples of Σ ±α^n: histogram and raw moments.
    Sample {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Series length; chosen from the bin width when omitted.
        #[arg(long = "N")]
        level: Option<usize>,
    },
    /// g(z) by quadrature with error estimates.
    Gfun {
        #[arg(long)]
        coeffs: String,
        /// Points such as `0.5`, `1+2i` or `-0.3i`; repeatable or comma-separated.
        #[arg(
            long,
            required = true,
            allow_hyphen_values = true,
            value_delimiter = ','
        )]
        z: Vec<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let command: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, &command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<VerificationFailed>().is_some() {
        return EXIT_VERIFY;
    }
    match e.downcast_ref::<quasinil::Error>() {
        Some(quasinil::Error::Unachievable { .. }) => EXIT_VERIFY,
        _ => EXIT_CONFIG,
    }
}

fn execute(cli: &Cli, command: &[String]) -> Result<()> {
    let caps = Caps::from_env()?;
    let (out, verdict) = dispatch(&cli.command, &caps)?;
    match &cli.out {
        Some(dir) => {
            out.write_to(dir, command, caps)?;
        }
        None => print!("{}", out.primary.contents),
    }
    match verdict {
        Some(msg) => Err(VerificationFailed(msg).into()),
        None => Ok(()),
    }
}

/// Reads a coefficient spec, following `@path` indirection.
pub fn load_spec(arg: &str) -> Result<CoefficientSpec> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading coefficient file {path}"))?,
        None => arg.to_string(),
    };
    Ok(CoefficientSpec::parse(&text)?)
}

/// Command output plus an optional failure message for checks that did
/// not hold (the files are still written).
type Outcome = (RunOutput, Option<String>);

pub fn dispatch(command: &Command, caps: &Caps) -> Result<Outcome> {
    match command {
        Command::Partitions { p } => cmd_partitions(*p, caps).map(|o| (o, None)),
        Command::Moments {
            coeffs,
            op,
            order,
            order2,
            method,
            level,
            tol,
            exact,
        } => {
            let spec = load_spec(coeffs)?;
            cmd_moments(
                &spec, *op, *order, *order2, *method, *level, *tol, *exact, caps,
            )
        }
        Command::Sigma {
            coeffs,
            kmax,
            level,
        } => cmd_sigma(&load_spec(coeffs)?, *kmax, *level).map(|o| (o, None)),
        Command::Norms {
            coeffs,
            level,
            kmax,
            tol,
            max_iter,
        } => cmd_norms(&load_spec(coeffs)?, *level, *kmax, *tol, *max_iter, caps),
        Command::Ratio { word, alpha, mmax } => cmd_ratio(word, alpha, *mmax).map(|o| (o, None)),
        Command::Verify {
            suite,
            format,
            inject_fault,
        } => cmd_verify(*suite, *format, *inject_fault),
        Command::Sample {
            alpha,
            count,
            seed,
            bins,
            level,
        } => cmd_sample(alpha, *count, *seed, *bins, *level).map(|o| (o, None)),
        Command::Gfun { coeffs, z, tol } => {
            cmd_gfun(&load_spec(coeffs)?, z, *tol).map(|o| (o, None))
        }
    }
}

fn cmd_partitions(p: usize, caps: &Caps) -> Result<RunOutput> {
    let table = CountTable::build(p, caps)?;
    let mut csv = CsvTable::new(&["shape", "k", "gamma", "alpha"])?;
    for r in &table.rows {
        csv.row([
            format!("{p};{}", r.shape),
            r.k.to_string(),
            r.gamma.to_string(),
            r.alpha.to_string(),
        ])?;
    }
    for (k, s) in &table.sums {
        csv.row([
            format!("s_{p}({k})"),
            k.to_string(),
            String::new(),
            s.to_string(),
        ])?;
    }
    Ok(RunOutput::new(csv.finish("partitions.csv")?)
        .with(Artifact::json("partitions.json", &table)?))
}

fn target_of(op: Op, order: usize, order2: Option<usize>) -> Result<MomentTarget> {
    Ok(match op {
        Op::X => MomentTarget::XPower { order },
        Op::Y => MomentTarget::YPower { order },
        Op::Re => MomentTarget::RePower { order },
        Op::Im => MomentTarget::ImPower { order },
        Op::AstarA => MomentTarget::AstarAPower { p: order },
        Op::Mixed => match order2 {
            Some(m) => MomentTarget::Mixed { n: order, m },
            None => bail!("--op mixed needs --order2"),
        },
    })
}

#[derive(Debug, Serialize)]
struct MomentsSummary {
    target: MomentTarget,
    reports: Vec<MomentReport>,
    /// Largest pairwise difference of route values.
    max_discrepancy: f64,
    /// Every pair agrees within the sum of its certified bounds.
    consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    mixed: Option<quasinil::moments::MixedMomentReport>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_moments(
    spec: &CoefficientSpec,
    op: Op,
    order: usize,
    order2: Option<usize>,
    method: Method,
    level: Option<usize>,
    tol: f64,
    exact: bool,
    caps: &Caps,
) -> Result<Outcome> {
    let target = target_of(op, order, order2)?;
    let need_level = |route: &str| level.with_context(|| format!("the {route} route needs --N"));
    let mut reports = Vec::new();
    match method {
        Method::Combinatorial => reports.push(moment_combinatorial(spec, target, level, caps)?),
        Method::Dense => reports.push(moment_dense_oracle(
            spec,
            target,
            need_level("dense")?,
            exact,
            caps,
        )?),
        Method::Charfn => reports.push(moment_charfn(spec, target, tol, caps)?),
        Method::Rademacher => {
            reports.push(rademacher_moment(spec, target, need_level("rademacher")?)?)
        }
        Method::All => {
            let geometric = spec.ratio().is_some();
            let single = !matches!(
                target,
                MomentTarget::AstarAPower { .. } | MomentTarget::Mixed { .. }
            );
            if !matches!(target, MomentTarget::Mixed { .. }) {
                reports.push(moment_combinatorial(spec, target, None, caps)?);
                if let Some(n) = level {
                    reports.push(moment_combinatorial(spec, target, Some(n), caps)?);
                }
            }
            if let Some(n) = level {
                reports.push(moment_dense_oracle(spec, target, n, exact, caps)?);
                if single {
                    reports.push(rademacher_moment(spec, target, n)?);
                }
            }
            if single && geometric {
                reports.push(moment_charfn(spec, target, tol, caps)?);
            }
        }
    }
    let mut max_discrepancy = 0.0f64;
    let mut failures = Vec::new();
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            let d = verify::route_gap(a, b);
            max_discrepancy = max_discrepancy.max(d);
            let agree = match (&a.exact, &b.exact, a.level == b.level) {
                (Some(x), Some(y), true) if a.error_bound == 0.0 && b.error_bound == 0.0 => x == y,
                _ => d <= a.total_bound() + b.total_bound() + 1e-12 * a.value.abs().max(1.0),
            };
            if !agree {
                failures.push(format!("{} vs {}: |Δ| = {d:e}", a.route, b.route));
            }
        }
    }
    let mixed = match (method, target, level) {
        (Method::All, MomentTarget::Mixed { n, m }, Some(l)) => {
            Some(mixed_moment_check(spec, n, m, l, caps)?)
        }
        _ => None,
    };
    if let Some(r) = &mixed {
        if !r.equal {
            failures.push(format!("τ(a^{}b^{}) ≠ τ(a^{})τ(b^{})", r.n, r.m, r.n, r.m));
        }
    }

    let mut csv = CsvTable::new(&[
        "target",
        "route",
        "level",
        "exact",
        "value",
        "error_bound",
        "tail_bound",
    ])?;
    for r in &reports {
        csv.row([
            r.target.to_string(),
            r.route.to_string(),
            r.level.map_or_else(|| "inf".to_string(), |l| l.to_string()),
            r.exact_string().unwrap_or_default(),
            r.value.to_string(),
            r.error_bound.to_string(),
            r.tail_bound.to_string(),
        ])?;
    }
    let summary = MomentsSummary {
        target,
        reports,
        max_discrepancy,
        consistent: failures.is_empty(),
        mixed,
    };
    let mut out =
        RunOutput::new(csv.finish("moments.csv")?).with(Artifact::json("moments.json", &summary)?);
    out.coeffs = Some(spec.to_json());
    out.levels = level.into_iter().collect();
    Ok((out, failures.first().cloned()))
}

fn cmd_sigma(spec: &CoefficientSpec, kmax: usize, level: usize) -> Result<RunOutput> {
    let table = sigma_table(spec, kmax, level)?;
    let profile = decay_profile(spec, kmax, level)?;
    let mut csv = CsvTable::new(&["k", "sigma", "tail_bound", "k_fact_sigma", "root"])?;
    for (s, d) in table.iter().skip(1).zip(&profile.entries) {
        csv.row([
            s.k.to_string(),
            fmt_rational(&s.value),
            fmt_rational(&s.tail_bound),
            d.k_fact_sigma.to_string(),
            d.root.to_string(),
        ])?;
    }
    let mut out =
        RunOutput::new(csv.finish("sigma.csv")?).with(Artifact::json("sigma.json", &profile)?);
    out.coeffs = Some(spec.to_json());
    out.levels = vec![level];
    Ok(out)
}

fn cmd_norms(
    spec: &CoefficientSpec,
    level: usize,
    kmax: usize,
    tol: f64,
    max_iter: usize,
    caps: &Caps,
) -> Result<Outcome> {
    caps.check_oracle(level)?;
    let rows = power_norms(spec, level, kmax, tol, max_iter)?;
    let mut csv = CsvTable::new(&["k", "norm", "root", "bound", "bound_root", "within"])?;
    for r in &rows {
        csv.row([
            r.k.to_string(),
            r.norm.to_string(),
            r.root.to_string(),
            r.bound.to_string(),
            r.bound_root.to_string(),
            r.within(tol).to_string(),
        ])?;
    }
    let failure = rows.iter().find(|r| !r.within(tol)).map(|r| {
        format!(
            "‖A_{level}^{}‖ = {} exceeds k!σ_k = {}",
            r.k, r.norm, r.bound
        )
    });
    let mut out =
        RunOutput::new(csv.finish("norms.csv")?).with(Artifact::json("norms.json", &rows)?);
    out.coeffs = Some(spec.to_json());
    out.levels = vec![level];
    Ok((out, failure))
}

fn cmd_ratio(word: &str, alpha: &str, mmax: usize) -> Result<RunOutput> {
    let w = PQWord::parse(word)?;
    let a = parse_rational(alpha)?;
    let profile = ratio_profile(&w, &a, mmax)?;
    let mut csv = CsvTable::new(&["m", "ratio", "root"])?;
    for r in &profile.rows {
        csv.row([r.m.to_string(), fmt_rational(&r.ratio), r.root.to_string()])?;
    }
    let mut out =
        RunOutput::new(csv.finish("ratio.csv")?).with(Artifact::json("ratio.json", &profile)?);
    out.coeffs = Some(CoefficientSpec::geometric(a)?.to_json());
    Ok(out)
}

fn cmd_verify(suite: Suite, format: Format, fault: Option<Fault>) -> Result<Outcome> {
    let report = run_suite(suite, fault)?;
    let json = Artifact::json("verify.json", &report)?;
    let primary = match format {
        Format::Text => Artifact {
            name: "verify.txt".into(),
            contents: report.text(),
        },
        Format::Json => json.clone(),
    };
    let mut out = RunOutput::new(primary);
    if format == Format::Text {
        out = out.with(json);
    }
    let failure = report
        .first_failure
        .map(|name| format!("first failing identity: {name}"));
    Ok((out, failure))
}

fn cmd_sample(
    alpha: &str,
    count: usize,
    seed: u64,
    bins: usize,
    level: Option<usize>,
) -> Result<RunOutput> {
    let a = parse_rational(alpha)?;
    let level = level.unwrap_or_else(|| default_level(quasinil::scalar::to_f64(&a), bins));
    let run = sample_series(&a, count, seed, level, bins)?;
    let mut csv = CsvTable::new(&["bin_left", "bin_right", "count"])?;
    for (i, c) in run.histogram.counts.iter().enumerate() {
        csv.row([
            run.histogram.edges[i].to_string(),
            run.histogram.edges[i + 1].to_string(),
            c.to_string(),
        ])?;
    }
    let mut out =
        RunOutput::new(csv.finish("histogram.csv")?).with(Artifact::json("sample.json", &run)?);
    out.coeffs = Some(CoefficientSpec::geometric(a)?.to_json());
    out.levels = vec![level];
    out.seed = Some(seed);
    Ok(out)
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    t.parse::<Complex64>()
        .map_err(|_| quasinil::Error::Parse(format!("not a complex number: {s:?}")).into())
}

fn cmd_gfun(spec: &CoefficientSpec, zs: &[String], tol: f64) -> Result<RunOutput> {
    let quad = QuadParams {
        tol,
        ..QuadParams::default()
    };
    let points = zs
        .iter()
        .map(|s| parse_complex(s))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = CsvTable::new(&[
        "z_re",
        "z_im",
        "g_re",
        "g_im",
        "error_estimate",
        "cutoff",
        "panels",
        "level",
    ])?;
    let mut values = Vec::new();
    for z in points {
        let g = g_eval(spec, z, &quad)?;
        csv.row([
            z.re.to_string(),
            z.im.to_string(),
            g.re.to_string(),
            g.im.to_string(),
            g.error_estimate().to_string(),
            g.cutoff.to_string(),
            g.panels.to_string(),
            g.level.to_string(),
        ])?;
        values.push(g);
    }
    let mut out =
        RunOutput::new(csv.finish("gfun.csv")?).with(Artifact::json("gfun.json", &values)?);
    out.coeffs = Some(spec.to_json());
    Ok(out)
}
