//! Command-line driver: parses a configuration, runs the requested
//! problems and writes CSV, JSON or a plain-text table.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use kronmode::fd::Accuracy;
use kronmode::problems::{
    gpe_run, heat3d_run, hkmp_run, hkp_run, pipeflow_run, GpeConfig, HeatConfig, HkmpConfig, HkpConfig,
    PipeflowConfig, Precision, RunReport,
};
use kronmode::NormKind;

pub mod selftest;

/// Exact dimension-split exponential integrators: experiments and benchmarks.
#[derive(Debug, Clone, Parser)]
#[command(name = "kronmode", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table, global = true)]
    pub output: OutputFormat,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for the μ-mode products (a hint).
    #[arg(long, env = "KRONMODE_THREADS", global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// Seed for randomized checks.
    #[arg(long, default_value_t = 12345, global = true)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Max,
    Two,
}

impl NormArg {
    fn kind(self) -> NormKind {
        match self {
            NormArg::Max => NormKind::Max,
            NormArg::Two => NormKind::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Heat,
    Pipeflow,
    SchrodingerTi,
    SchrodingerTd,
    Gpe,
}

fn parse_accuracy(s: &str) -> Result<Accuracy, String> {
    s.parse::<Accuracy>().map_err(|e| e.to_string())
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn positive() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::<usize>::new().range(1..)
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Heat equation on [0, 2π)³ against the analytic solution.
    Heat(HeatArgs),
    /// Pipe-flow diffusion–advection against the Arnoldi baseline.
    Pipeflow(PipeflowArgs),
    /// Schrödinger equation with time-independent potential in a Hermite basis.
    SchrodingerTi(SchrodingerTiArgs),
    /// Schrödinger equation with time-dependent potential, exponential midpoint rule.
    SchrodingerTd(SchrodingerTdArgs),
    /// Gross–Pitaevskii equation with Strang splitting.
    Gpe(GpeArgs),
    /// Runs one problem for a list of sizes.
    Sweep(SweepArgs),
    /// Runs the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct HeatArgs {
    /// Grid points per direction.
    #[arg(long, default_value_t = 40, value_parser = positive(), allow_negative_numbers = true)]
    pub n: usize,
    /// Accuracy order (even integer) or "inf" for spectral.
    #[arg(long, default_value = "2", value_parser = parse_accuracy)]
    pub p: Accuracy,
    /// Final time.
    #[arg(long = "T", default_value_t = 1.0, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1, value_parser = positive(), allow_negative_numbers = true)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub norm: NormArg,
}

#[derive(Debug, Clone, Args)]
pub struct PipeflowArgs {
    #[arg(long, default_value_t = 32, value_parser = positive(), allow_negative_numbers = true)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 4.0, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1, value_parser = positive(), allow_negative_numbers = true)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub norm: NormArg,
    /// Tolerance of the Arnoldi reference.
    #[arg(long, default_value_t = 1e-10, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub reference_tol: f64,
    /// Skip the reference computation.
    #[arg(long)]
    pub no_reference: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SchrodingerTiArgs {
    /// Hermite basis functions per direction.
    #[arg(long, default_value_t = 40, value_parser = positive(), allow_negative_numbers = true)]
    pub k: usize,
    #[arg(long = "T", default_value_t = 1.0, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub t_final: f64,
    /// Basis size of the reference solution.
    #[arg(long, default_value_t = 120, value_parser = positive(), allow_negative_numbers = true)]
    pub reference_k: usize,
    #[arg(long)]
    pub no_reference: bool,
    /// Replace cos(2πx₁) by x₁²/2.
    #[arg(long)]
    pub harmonic_only: bool,
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub norm: NormArg,
}

#[derive(Debug, Clone, Args)]
pub struct SchrodingerTdArgs {
    #[arg(long, default_value_t = 20, value_parser = positive(), allow_negative_numbers = true)]
    pub k: usize,
    #[arg(long = "T", default_value_t = 1.0, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub t_final: f64,
    #[arg(long, default_value_t = 50, value_parser = positive(), allow_negative_numbers = true)]
    pub steps: usize,
    /// Step count of the reference on the same basis.
    #[arg(long, default_value_t = 2048, value_parser = positive(), allow_negative_numbers = true)]
    pub reference_steps: usize,
    #[arg(long)]
    pub no_reference: bool,
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub norm: NormArg,
}

#[derive(Debug, Clone, Args)]
pub struct GpeArgs {
    #[arg(long, default_value_t = 32, value_parser = positive(), allow_negative_numbers = true)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 1.0, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub tau: f64,
    /// Clustering strength of the grid (0 = uniform).
    #[arg(long, default_value_t = kronmode::problems::gpe::DEFAULT_STRETCH)]
    pub stretch: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    /// Grid sizes (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = positive(), allow_negative_numbers = true)]
    pub n: Vec<usize>,
    /// Hermite basis sizes (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = positive(), allow_negative_numbers = true)]
    pub k: Vec<usize>,
    #[arg(long, default_value = "2", value_parser = parse_accuracy)]
    pub p: Accuracy,
    #[arg(long = "T", value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub t_final: Option<f64>,
    #[arg(long, value_parser = positive(), allow_negative_numbers = true)]
    pub steps: Option<usize>,
    #[arg(long, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub norm: NormArg,
}

/// One run of the plan.
#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    Heat(HeatConfig, Precision),
    Pipeflow(PipeflowConfig),
    SchrodingerTi(HkpConfig),
    SchrodingerTd(HkmpConfig),
    Gpe(GpeConfig),
}

impl RunSpec {
    pub fn execute(&self) -> kronmode::Result<RunReport> {
        match self {
            RunSpec::Heat(cfg, Precision::Double) => heat3d_run::<f64>(cfg).map(|r| r.report),
            RunSpec::Heat(cfg, Precision::Single) => heat3d_run::<f32>(cfg).map(|r| r.report),
            RunSpec::Pipeflow(cfg) => pipeflow_run(cfg).map(|r| r.report),
            RunSpec::SchrodingerTi(cfg) => hkp_run(cfg).map(|r| r.report),
            RunSpec::SchrodingerTd(cfg) => hkmp_run(cfg).map(|r| r.report),
            RunSpec::Gpe(cfg) => gpe_run(cfg).map(|r| r.report),
        }
    }
}

fn precision(p: PrecisionArg) -> Precision {
    match p {
        PrecisionArg::Single => Precision::Single,
        PrecisionArg::Double => Precision::Double,
    }
}

fn usage(kind: clap::error::ErrorKind, message: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(kind, message)
}

fn double_only(p: PrecisionArg, what: &str) -> Result<(), clap::Error> {
    if p == PrecisionArg::Single {
        return Err(usage(
            clap::error::ErrorKind::ArgumentConflict,
            format!("--precision single is supported by the heat problem only, not {what}"),
        ));
    }
    Ok(())
}

fn min_size(flag: &str, value: usize, min: usize) -> Result<(), clap::Error> {
    if value < min {
        return Err(usage(
            clap::error::ErrorKind::ValueValidation,
            format!("invalid value '{value}' for '--{flag}': must be at least {min}"),
        ));
    }
    Ok(())
}

/// Validated list of runs for a problem command; empty for `selftest`.
pub fn plan(command: &Command) -> Result<Vec<RunSpec>, clap::Error> {
    let specs = match command {
        Command::Heat(a) => {
            min_size("n", a.n, 8)?;
            vec![RunSpec::Heat(
                HeatConfig { n: a.n, accuracy: a.p, t_final: a.t_final, steps: a.steps, norm: a.norm.kind() },
                precision(a.precision),
            )]
        }
        Command::Pipeflow(a) => {
            min_size("n", a.n, 16)?;
            vec![RunSpec::Pipeflow(PipeflowConfig {
                n: a.n,
                t_final: a.t_final,
                steps: a.steps,
                norm: a.norm.kind(),
                reference_tol: (!a.no_reference).then_some(a.reference_tol),
            })]
        }
        Command::SchrodingerTi(a) => {
            min_size("k", a.k, 8)?;
            vec![RunSpec::SchrodingerTi(HkpConfig {
                k: a.k,
                t_final: a.t_final,
                reference_k: (!a.no_reference).then_some(a.reference_k),
                harmonic_only: a.harmonic_only,
                norm: a.norm.kind(),
            })]
        }
        Command::SchrodingerTd(a) => {
            min_size("k", a.k, 8)?;
            vec![RunSpec::SchrodingerTd(HkmpConfig {
                k: a.k,
                t_final: a.t_final,
                steps: a.steps,
                reference_steps: (!a.no_reference).then_some(a.reference_steps),
                norm: a.norm.kind(),
            })]
        }
        Command::Gpe(a) => {
            min_size("n", a.n, 16)?;
            kronmode::problems::gpe::step_count(a.t_final, a.tau)
                .map_err(|e| usage(clap::error::ErrorKind::ValueValidation, e))?;
            vec![RunSpec::Gpe(GpeConfig {
                n: a.n,
                t_final: a.t_final,
                tau: a.tau,
                stretch: a.stretch,
                initial: Default::default(),
            })]
        }
        Command::Sweep(a) => sweep_plan(a)?,
        Command::Selftest => Vec::new(),
    };
    Ok(specs)
}

fn sweep_plan(a: &SweepArgs) -> Result<Vec<RunSpec>, clap::Error> {
    use clap::error::ErrorKind;
    let hermite = matches!(a.problem, ProblemArg::SchrodingerTi | ProblemArg::SchrodingerTd);
    let sizes = if hermite { &a.k } else { &a.n };
    if sizes.is_empty() {
        let flag = if hermite { "--k" } else { "--n" };
        return Err(usage(ErrorKind::MissingRequiredArgument, format!("sweep over this problem needs {flag}")));
    }
    if a.problem != ProblemArg::Heat {
        double_only(a.precision, "this problem")?;
    }
    let mut specs = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let command = match a.problem {
            ProblemArg::Heat => Command::Heat(HeatArgs {
                n: s,
                p: a.p,
                t_final: a.t_final.unwrap_or(1.0),
                steps: a.steps.unwrap_or(1),
                precision: a.precision,
                norm: a.norm,
            }),
            ProblemArg::Pipeflow => Command::Pipeflow(PipeflowArgs {
                n: s,
                t_final: a.t_final.unwrap_or(4.0),
                steps: a.steps.unwrap_or(1),
                norm: a.norm,
                reference_tol: 1e-10,
                no_reference: false,
            }),
            ProblemArg::SchrodingerTi => Command::SchrodingerTi(SchrodingerTiArgs {
                k: s,
                t_final: a.t_final.unwrap_or(1.0),
                reference_k: 120,
                no_reference: false,
                harmonic_only: false,
                norm: a.norm,
            }),
            ProblemArg::SchrodingerTd => Command::SchrodingerTd(SchrodingerTdArgs {
                k: s,
                t_final: a.t_final.unwrap_or(1.0),
                steps: a.steps.unwrap_or(50),
                reference_steps: 2048,
                no_reference: false,
                norm: a.norm,
            }),
            ProblemArg::Gpe => Command::Gpe(GpeArgs {
                n: s,
                t_final: a.t_final.unwrap_or(1.0),
                tau: a.tau.unwrap_or(0.1),
                stretch: kronmode::problems::gpe::DEFAULT_STRETCH,
            }),
        };
        specs.extend(plan(&command)?);
    }
    Ok(specs)
}

pub const CSV_HEADER: &str =
    "problem,n,k,p,steps,tau,precision,norm,rel_error,time_exp_s,time_mumode_s,time_other_s,total_s";

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn csv_row(r: &RunReport) -> String {
    [
        r.problem.to_string(),
        opt(&r.n),
        opt(&r.k),
        opt(&r.p),
        r.steps.to_string(),
        num(r.tau),
        r.precision.to_string(),
        r.norm.clone(),
        r.rel_error.map(num).unwrap_or_default(),
        num(r.time_exp_s),
        num(r.time_mumode_s),
        num(r.time_other_s),
        num(r.total_s),
    ]
    .join(",")
}

pub fn render_csv(reports: &[RunReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

/// One object for a single run, an array otherwise.
pub fn render_json(reports: &[RunReport], as_array: bool) -> String {
    let text = if as_array || reports.len() != 1 {
        serde_json::to_string_pretty(reports)
    } else {
        serde_json::to_string_pretty(&reports[0])
    };
    let mut text = text.expect("reports serialize");
    text.push('\n');
    text
}

pub fn render_table(reports: &[RunReport]) -> String {
    let header = ["problem", "n", "k", "p", "steps", "tau", "prec", "norm", "rel_error", "drift", "exp [s]", "mu-mode [s]", "other [s]", "total [s]"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.problem.to_string(),
                opt(&r.n),
                opt(&r.k),
                opt(&r.p),
                r.steps.to_string(),
                format!("{:.4}", r.tau),
                r.precision.to_string(),
                r.norm.clone(),
                r.rel_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
                r.norm_drift.map(|e| format!("{e:.1e}")).unwrap_or_else(|| "-".into()),
                format!("{:.4}", r.time_exp_s),
                format!("{:.4}", r.time_mumode_s),
                format!("{:.4}", r.time_other_s),
                format!("{:.4}", r.total_s),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    for row in &rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn render(reports: &[RunReport], format: OutputFormat, as_array: bool) -> String {
    match format {
        OutputFormat::Csv => render_csv(reports),
        OutputFormat::Json => render_json(reports, as_array),
        OutputFormat::Table => render_table(reports),
    }
}

fn configure_threads(threads: Option<u32>) -> Result<(), String> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .map_err(|e| format!("cannot configure {t} worker threads: {e}"))?;
    }
    Ok(())
}

fn emit(text: &str, out: &Option<PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Runs a parsed configuration; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let specs = match plan(&cli.command) {
        Ok(s) => s,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(msg) = configure_threads(cli.threads) {
        eprintln!("warning: {msg}");
    }

    if matches!(cli.command, Command::Selftest) {
        let outcome = selftest::run_all(cli.seed);
        if let Err(e) = emit(&outcome.summary(), &cli.out) {
            eprintln!("error: {e}");
            return 1;
        }
        return if outcome.all_passed() { 0 } else { 1 };
    }

    let mut reports = Vec::with_capacity(specs.len());
    for spec in &specs {
        match spec.execute() {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {e}");
                return if matches!(e, kronmode::Error::Config(_)) { 2 } else { 1 };
            }
        }
    }
    let as_array = matches!(cli.command, Command::Sweep(_));
    if let Err(e) = emit(&render(&reports, cli.output, as_array), &cli.out) {
        eprintln!("error: cannot write report: {e}");
        return 1;
    }
    0
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("kronmode").chain(args.iter().copied()))
    }

    #[test]
    fn heat_command() {
        let cli = parse(&["heat", "--n", "40", "--p", "2", "--T", "1", "--steps", "1"]).unwrap();
        let specs = plan(&cli.command).unwrap();
        assert_eq!(
            specs,
            vec![RunSpec::Heat(HeatConfig::default(), Precision::Double)]
        );
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for args in [
            &["heat", "--n", "-3"][..],
            &["heat", "--n", "0"],
            &["heat", "--p", "3"],
            &["heat", "--T", "-1"],
            &["heat", "--bogus"],
            &["pipeflow", "--n", "8"],
            &["gpe", "--tau", "0.3"],
            &["pipeflow", "--precision", "single"],
        ] {
            let code = match parse(args) {
                Err(e) => e.exit_code(),
                Ok(cli) => plan(&cli.command).unwrap_err().exit_code(),
            };
            assert_eq!(code, 2, "{args:?}");
        }
    }

    #[test]
    fn sweep_plan_in_order() {
        let cli = parse(&["sweep", "--problem", "heat", "--n", "40,55,70,85,100"]).unwrap();
        let specs = plan(&cli.command).unwrap();
        let ns: Vec<usize> = specs
            .iter()
            .map(|s| match s {
                RunSpec::Heat(c, _) => c.n,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ns, vec![40, 55, 70, 85, 100]);
        assert!(parse(&["sweep", "--problem", "schrodinger-ti", "--n", "40"])
            .map(|c| plan(&c.command))
            .unwrap()
            .is_err());
    }

    #[test]
    fn spectral_flag() {
        let cli = parse(&["heat", "--p", "inf"]).unwrap();
        match &plan(&cli.command).unwrap()[0] {
            RunSpec::Heat(c, _) => assert_eq!(c.accuracy, Accuracy::Spectral),
            _ => unreachable!(),
        }
    }

    #[test]
    fn csv_layout() {
        let cli = parse(&["heat", "--n", "8", "--steps", "2"]).unwrap();
        let r = plan(&cli.command).unwrap()[0].execute().unwrap();
        let text = render_csv(&[r]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 13);
        assert_eq!(&cells[..5], &["heat", "8", "", "2", "2"]);
        assert_eq!(cells[5], "5.000000000000000e-1");
        assert_eq!(cells[6], "double");
        let err: f64 = cells[8].parse().unwrap();
        assert!(err > 0.0);
    }

    #[test]
    fn table_has_one_line_per_run() {
        let cli = parse(&["sweep", "--problem", "heat", "--n", "8,9"]).unwrap();
        let reports: Vec<RunReport> = plan(&cli.command).unwrap().iter().map(|s| s.execute().unwrap()).collect();
        let t = render_table(&reports);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().next().unwrap().contains("rel_error"));
    }
}
