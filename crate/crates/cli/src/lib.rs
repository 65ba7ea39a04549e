//! Command-line front end for the `nikolskii_core` laboratory.
//!
//! Records go to stdout (or `--output`), diagnostics to stderr. Exit codes:
//! 0 success, 1 runtime or domain failure, 2 usage error.

pub mod format;
pub mod thresholds;
pub mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nikolskii_core::oracles::{
    c_q, chi_moment, expected_qq_norm, gaussian_tail, moment_ratio_factor, recip_moment_factor,
    stirling_ratio_check,
};
use nikolskii_core::poly::fejer_poly;
use nikolskii_core::sampling::parse_seed;
use nikolskii_core::sweep::{worst_case_probe_with, SweepRow};
use nikolskii_core::{
    dimension_match, run_estimator, run_sweep, BasisKind, BasisSpec, DimensionMatchReport, EstimatorTask,
    Law, NormSpec, OracleValue, QuadConfig, RandomSpec, Statistic, SweepPlan, SweepResult,
};
use serde::{Deserialize, Serialize};

use format::{sig17, write_csv, write_json, EstimateRecord};

#[derive(Debug, Parser)]
#[command(name = "nikolskii", version, about = "Average Nikolskii factors of random trigonometric polynomials")]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes numeric output.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of one statistic.
    Estimate(EstimateArgs),
    /// Run the sweeps and dimension matches of a JSON plan file.
    Sweep(SweepArgs),
    /// Run a verification bundle and print PASS/FAIL per check.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
    },
    /// Evaluate a closed-form oracle.
    Oracle {
        #[command(subcommand)]
        oracle: OracleCommand,
    },
    /// Nikolskii factors of the Fejér kernel across degrees.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticKind {
    Nikolskii,
    MomentRatio,
    NormMoment,
    RecipSupMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn parse_exponent(s: &str) -> Result<NormSpec, String> {
    s.parse::<NormSpec>().map_err(|e| e.to_string())
}

fn parse_seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

fn parse_basis(s: &str) -> Result<BasisKind, String> {
    s.parse::<BasisKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct QuadArgs {
    /// Grid points per axis per basis frequency for non-even p.
    #[arg(long, default_value_t = 16)]
    pub oversample: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 6)]
    pub max_doublings: u32,
}

impl QuadArgs {
    fn config(&self) -> QuadConfig {
        QuadConfig {
            oversample: self.oversample,
            rel_tol: self.rel_tol,
            max_doublings: self.max_doublings,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum, default_value = "nikolskii")]
    pub statistic: StatisticKind,
    /// Denominator exponent (decimal ≥ 1 or `inf`).
    #[arg(long, value_parser = parse_exponent)]
    pub p: Option<NormSpec>,
    /// Numerator exponent (decimal ≥ 1 or `inf`).
    #[arg(long, value_parser = parse_exponent)]
    pub q: Option<NormSpec>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    /// real-1d, real-tensor or complex-exponential (default: real-1d for d=1, real-tensor otherwise).
    #[arg(long, value_parser = parse_basis)]
    pub basis: Option<BasisKind>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long, value_parser = parse_seed_arg, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value = "gaussian")]
    pub law: Law,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// JSON plan: a single sweep, or `{"sweeps": [...], "dimension_match": [...]}`.
    pub plan: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[arg(long, value_parser = parse_exponent)]
    pub p: NormSpec,
    #[arg(long, value_parser = parse_exponent)]
    pub q: NormSpec,
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<usize>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the probe kernels as JSON polynomials.
    #[arg(long)]
    pub kernels: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum OracleCommand {
    /// Gaussian absolute moment constant C(q).
    Cq { q: f64 },
    /// Factor relating E(‖T‖_q^k/‖T‖_2^l) to E‖T‖_q^k.
    #[command(alias = "moment-ratio")]
    Factor26 { k: u32, l: u32, n: u64 },
    /// Factor relating E(‖T‖_2^k/‖T‖_q^l) to E‖T‖_q^{-l}.
    #[command(alias = "reciprocal")]
    Factor24 { k: u32, l: u32, n: u64 },
    /// Chi moment E|a|_2^k for a ∈ R^N.
    Chi {
        n: u64,
        #[arg(allow_hyphen_values = true)]
        k: f64,
    },
    /// Gaussian two-sided tail P(|g| > t) with its bounds.
    Tail { t: f64 },
    /// Stirling ratio Γ(x+1)e^x/(√(2π)x^{x+½}).
    Stirling { x: f64 },
    /// Expected E‖T‖_q^q = C(q)^q N^{q/2}.
    Eqq { q: f64, n: u64 },
}

/// A plan file: one sweep, or several sweeps and dimension matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanFile {
    Single(SweepPlan),
    Multi(MultiPlan),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiPlan {
    #[serde(default)]
    pub sweeps: Vec<SweepPlan>,
    #[serde(default)]
    pub dimension_match: Vec<DimensionMatchPlan>,
}

fn default_matched_basis() -> BasisKind {
    BasisKind::RealTensor
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionMatchPlan {
    pub statistic: Statistic,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_matched_basis")]
    pub basis: BasisKind,
    #[serde(default)]
    pub quad: QuadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutput {
    pub sweeps: Vec<SweepResult>,
    pub dimension_match: Vec<DimensionMatchReport>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<nikolskii_core::Error> for Failure {
    fn from(e: nikolskii_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<ExitCode, Failure>;

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: cannot build worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify { suite } => cmd_verify(suite),
        Command::Oracle { oracle } => cmd_oracle(&oracle),
        Command::Probe(args) => cmd_probe(&args),
    }
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn require<T>(value: Option<T>, flag: &str, statistic: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--{flag} is required for {statistic}")))
}

pub fn statistic_from_args(args: &EstimateArgs) -> Result<Statistic, Failure> {
    Ok(match args.statistic {
        StatisticKind::Nikolskii => Statistic::Nikolskii {
            p: require(args.p, "p", "nikolskii")?,
            q: require(args.q, "q", "nikolskii")?,
        },
        StatisticKind::MomentRatio => Statistic::MomentRatio {
            q: require(args.q, "q", "moment-ratio")?,
            k: require(args.k, "k", "moment-ratio")?,
            l: require(args.l, "l", "moment-ratio")?,
        },
        StatisticKind::NormMoment => Statistic::NormMoment {
            q: require(args.q, "q", "norm-moment")?,
            s: require(args.s, "s", "norm-moment")?,
        },
        StatisticKind::RecipSupMoment => Statistic::RecipSupMoment {
            r: require(args.r, "r", "recip-sup-moment")?,
        },
    })
}

fn cmd_estimate(args: &EstimateArgs) -> CmdResult {
    let statistic = statistic_from_args(args)?;
    let kind = args
        .basis
        .unwrap_or(if args.d == 1 { BasisKind::Real1d } else { BasisKind::RealTensor });
    let basis = BasisSpec::new(kind, args.d, args.n).map_err(|e| Failure::Usage(e.to_string()))?;
    let random = RandomSpec::new(args.law, args.sigma, args.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let quad = args.quad.config();
    quad.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let task = EstimatorTask::new(basis, random, statistic, args.samples).with_quad(quad);

    let estimate = run_estimator(&task)?;
    let record = EstimateRecord {
        seed: args.seed,
        law: args.law,
        sigma: args.sigma,
        basis: kind,
        d: args.d,
        n: args.n,
        big_n: basis.size(),
        statistic,
        estimate,
    };
    eprintln!(
        "{} d={} n={}: mean {} ± {} ({} rejected)",
        statistic.label(),
        args.d,
        args.n,
        sig17(estimate.mean),
        sig17(estimate.stderr),
        estimate.rejected
    );
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        OutputFormat::Csv => write_csv(&mut out, std::slice::from_ref(&record)).context("writing CSV")?,
        OutputFormat::Json => write_json(&mut out, &record)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn load_plan(path: &Path) -> Result<MultiPlan, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read plan {}: {e}", path.display())))?;
    let plan: PlanFile =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("malformed plan {}: {e}", path.display())))?;
    let plan = match plan {
        PlanFile::Single(s) => MultiPlan {
            sweeps: vec![s],
            dimension_match: Vec::new(),
        },
        PlanFile::Multi(m) => m,
    };
    if plan.sweeps.is_empty() && plan.dimension_match.is_empty() {
        return Err(Failure::Usage("plan has no sweeps or dimension matches".into()));
    }
    for s in &plan.sweeps {
        s.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    for m in &plan.dimension_match {
        m.quad.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(plan)
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let plan = load_plan(&args.plan)?;
    let mut output = PlanOutput {
        sweeps: Vec::new(),
        dimension_match: Vec::new(),
    };
    for s in &plan.sweeps {
        output.sweeps.push(run_sweep(s)?);
    }
    for m in &plan.dimension_match {
        output
            .dimension_match
            .push(dimension_match(m.statistic, m.big_n, m.samples, m.seed, m.basis, &m.quad)?);
    }

    let mut summary: Box<dyn Write> = if args.output.is_some() {
        Box::new(io::stdout().lock())
    } else {
        Box::new(io::stderr().lock())
    };
    for r in &output.sweeps {
        writeln!(
            summary,
            "sweep {} (normalizer {}): band ratio {} slope {} (normalized {}, residual {})",
            r.plan.statistic.label(),
            serde_json::to_string(&r.plan.normalizer).unwrap_or_default(),
            sig17(r.band.ratio),
            sig17(r.slope.slope),
            sig17(r.normalized_slope.slope),
            sig17(r.slope.residual)
        )?;
    }
    for r in &output.dimension_match {
        let points: Vec<String> = r.rows.iter().map(|row| format!("({},{})", row.d, row.n)).collect();
        writeln!(
            summary,
            "dimension match N={} over {}: max/min ratio {}",
            r.big_n,
            points.join(" "),
            sig17(r.band.ratio)
        )?;
    }
    drop(summary);

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        OutputFormat::Json => write_json(&mut out, &output)?,
        OutputFormat::Csv => {
            let mut records = Vec::new();
            for r in &output.sweeps {
                records.extend(
                    r.rows
                        .iter()
                        .map(|row| EstimateRecord::from_row(row, r.plan.statistic, r.plan.law, r.plan.sigma, r.plan.basis)),
                );
            }
            for (r, m) in output.dimension_match.iter().zip(&plan.dimension_match) {
                records.extend(
                    r.rows
                        .iter()
                        .map(|row: &SweepRow| EstimateRecord::from_row(row, m.statistic, Law::Gaussian, 1.0, m.basis)),
                );
            }
            write_csv(&mut out, &records).context("writing CSV")?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(suite: verify::Suite) -> CmdResult {
    let checks = verify::run_suite(suite)?;
    let mut out = io::stdout().lock();
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    writeln!(out, "{} checks, {} failed", checks.len(), failed)?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_oracle(out: &mut impl Write, v: OracleValue) -> io::Result<()> {
    if v.overflow {
        writeln!(out, "overflow")?;
    } else {
        writeln!(out, "{}", sig17(v.value))?;
    }
    if let Some(ls) = v.log_scale {
        writeln!(out, "log_scale {}", sig17(ls))?;
    }
    Ok(())
}

fn cmd_oracle(oracle: &OracleCommand) -> CmdResult {
    let mut out = io::stdout().lock();
    match *oracle {
        OracleCommand::Cq { q } => writeln!(out, "{}", sig17(c_q(q)?))?,
        OracleCommand::Factor26 { k, l, n } => print_oracle(&mut out, moment_ratio_factor(k, l, n)?)?,
        OracleCommand::Factor24 { k, l, n } => print_oracle(&mut out, recip_moment_factor(k, l, n)?)?,
        OracleCommand::Chi { n, k } => print_oracle(&mut out, chi_moment(n, k)?)?,
        OracleCommand::Tail { t } => {
            let b = gaussian_tail(t)?;
            writeln!(out, "lower {}", sig17(b.lower))?;
            writeln!(out, "exact {}", sig17(b.exact))?;
            writeln!(out, "upper {}", sig17(b.upper))?;
        }
        OracleCommand::Stirling { x } => writeln!(out, "{}", sig17(stirling_ratio_check(x)?))?,
        OracleCommand::Eqq { q, n } => writeln!(out, "{}", sig17(expected_qq_norm(q, n)?))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_probe(args: &ProbeArgs) -> CmdResult {
    let quad = args.quad.config();
    quad.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if args.degrees.is_empty() {
        return Err(Failure::Usage("at least one degree is required".into()));
    }
    let table = worst_case_probe_with(args.p, args.q, &args.degrees, &quad)?;
    if let Some(slope) = &table.slope {
        eprintln!(
            "Fejér probe ({}, {}): slope {} residual {}",
            args.p,
            args.q,
            sig17(slope.slope),
            sig17(slope.residual)
        );
    }
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        OutputFormat::Json => write_json(&mut out, &table)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["p", "q", "n", "N", "factor"]).context("writing CSV")?;
            for r in &table.rows {
                w.write_record([
                    args.p.to_string(),
                    args.q.to_string(),
                    r.n.to_string(),
                    r.big_n.to_string(),
                    sig17(r.factor),
                ])
                .context("writing CSV")?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    if let Some(path) = &args.kernels {
        let kernels: Vec<_> = args.degrees.iter().map(|&n| fejer_poly(n)).collect();
        write_json(BufWriter::new(File::create(path)?), &kernels)?;
    }
    Ok(ExitCode::SUCCESS)
}
