use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use gapvi::homotopy::HomotopyConfig;
use gapvi::prox::{CoVariant, SolverConfig, StepRule};
use gapvi::VIProblem;
use gapvi_cli::commands::{self, Suite};
use gapvi_cli::config::{effective_seed, ensure_parent_exists, CoSettings, ProblemSource, RunConfig, SolverKind, StartSpec};
use gapvi_cli::trace::write_trace;

#[derive(Parser)]
#[command(name = "gapvi", version, about = "Gap-function solvers for variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write its trace and summary.
    Solve(SolveArgs),
    /// Run a diagnostic suite and write its report.
    Diagnose(DiagnoseArgs),
    /// Run PG and the homotopy over a benchmark grid.
    Bench(BenchArgs),
    /// List builtin instances.
    ListProblems,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["problem", "problem_file"])))]
struct ProblemArgs {
    /// Builtin instance, `name[:param...]`.
    #[arg(long)]
    problem: Option<String>,
    /// Traffic network (`.tep`) or bimatrix game file.
    #[arg(long)]
    problem_file: Option<PathBuf>,
}

impl ProblemArgs {
    fn source(&self) -> ProblemSource {
        match (&self.problem, &self.problem_file) {
            (Some(spec), _) => ProblemSource::Builtin(spec.clone()),
            (None, Some(path)) => ProblemSource::File(path.clone()),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Pg,
    Homotopy,
    Co,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepRuleArg {
    Fixed,
    Backtracking,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoVariantArg {
    Modified,
    PureGap,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: ProblemArgs,
    #[arg(long, value_enum, default_value = "pg")]
    solver: SolverArg,
    /// Start point: comma-separated entries (fractions allowed),
    /// `barycenter` or `random`. Defaults to the set's reference point.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<StartSpec>,
    /// Gap parameter; the instance's recommended value by default.
    #[arg(long)]
    lambda: Option<f64>,
    /// Step size; `0.9 / L` by default (1 for `co`).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "fixed")]
    step_rule: StepRuleArg,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    eps_gap: Option<f64>,
    #[arg(long)]
    eps_stat: Option<f64>,
    /// Homotopy probe ratio.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps_gap_inner: Option<f64>,
    #[arg(long)]
    t_floor: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner_i: Option<usize>,
    #[arg(long, value_enum, default_value = "modified")]
    co_variant: CoVariantArg,
    /// Consensus stopping tolerance on `|F(x)|`.
    #[arg(long, default_value_t = 1e-8)]
    co_tol: f64,
    /// Seed for random start points; `GAPVI_SEED` overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON summary output; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    source: ProblemArgs,
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long)]
    lambda: Option<f64>,
    /// Step size for the proposition and error-bound suites; `0.9 / L` by default.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Level for the error-bound suite.
    #[arg(long, default_value_t = 0.125)]
    nu: f64,
    /// Tolerance for Minty violations.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// JSON report output; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run only the first N instances.
    #[arg(long)]
    limit: Option<usize>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_solve(args: &SolveArgs, problem: &VIProblem) -> Result<RunConfig> {
    let seed = effective_seed(args.seed)?;
    let lambda = args.lambda.unwrap_or_else(|| problem.recommended_lambda());
    let mut pg = match (args.alpha, args.solver) {
        (Some(alpha), _) => SolverConfig::new(lambda, alpha),
        (None, SolverArg::Co) => SolverConfig::new(lambda, 1.0),
        (None, _) => SolverConfig::recommended(problem, lambda)?,
    };
    if let StepRuleArg::Backtracking = args.step_rule {
        pg.step_rule = StepRule::backtracking();
    }
    if let Some(n) = args.max_iters {
        pg.max_iters = n;
    }
    if let Some(e) = args.eps_gap {
        pg.eps_gap = e;
    }
    if let Some(e) = args.eps_stat {
        pg.eps_stat = e;
    }
    pg.validate()?;
    let homotopy = matches!(args.solver, SolverArg::Homotopy)
        .then(|| {
            let mut hc = HomotopyConfig::new(pg.clone());
            if let Some(d) = args.delta {
                hc.delta = d;
            }
            if let Some(e) = args.eps_gap_inner {
                hc.eps_gap_inner = e;
            }
            if let Some(t) = args.t_floor {
                hc.t_floor = t;
            }
            if let Some(n) = args.max_outer {
                hc.max_outer = n;
            }
            if let Some(n) = args.max_inner_i {
                hc.max_inner_i = n;
            }
            hc.validate().map(|_| hc)
        })
        .transpose()?;
    let co = matches!(args.solver, SolverArg::Co).then(|| CoSettings {
        variant: match args.co_variant {
            CoVariantArg::Modified => CoVariant::Modified,
            CoVariantArg::PureGap => CoVariant::PureGap,
        },
        tol: args.co_tol,
    });
    let x0 = args.x0.clone().unwrap_or(StartSpec::Barycenter).resolve(problem, seed)?;
    Ok(RunConfig {
        problem: args.source.source(),
        solver: match args.solver {
            SolverArg::Pg => SolverKind::Pg,
            SolverArg::Homotopy => SolverKind::Homotopy,
            SolverArg::Co => SolverKind::Co,
        },
        pg,
        homotopy,
        co,
        x0_spec: args.x0.clone(),
        x0: x0.as_slice().to_vec(),
        seed,
    })
}

fn write_json(path: Option<&PathBuf>, value: &impl serde::Serialize) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut out, value)?;
            out.flush()?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn check_outputs(paths: &[Option<&PathBuf>]) -> Result<()> {
    paths.iter().flatten().try_for_each(|p| ensure_parent_exists(p))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(args) => {
            check_outputs(&[args.trace.as_ref(), args.report.as_ref()])?;
            let problem = args.source.source().load()?;
            let config = resolve_solve(&args, &problem)?;
            let outcome = commands::solve(&problem, &config)?;
            if let Some(path) = &args.trace {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                write_trace(BufWriter::new(file), &outcome.rows)?;
            }
            write_json(args.report.as_ref(), &outcome.summary)?;
            let s = &outcome.summary;
            eprintln!("{}: {:?}, gap {:.3e} after {} iterations", s.problem, s.status, s.final_gap, s.iterations);
            Ok(s.exit_code)
        }
        Command::Diagnose(args) => {
            check_outputs(&[args.report.as_ref()])?;
            let problem = args.source.source().load()?;
            let settings = commands::DiagnoseSettings {
                lambda: args.lambda.unwrap_or_else(|| problem.recommended_lambda()),
                alpha: args.alpha,
                samples: args.samples,
                seed: effective_seed(args.seed)?,
                nu: args.nu,
                tol: args.tol,
            };
            let (report, ok) = commands::diagnose(&problem, args.suite, &settings)?;
            write_json(args.report.as_ref(), &report)?;
            Ok(if ok { 0 } else { 2 })
        }
        Command::Bench(args) => {
            check_outputs(&[args.out.as_ref()])?;
            let rows = commands::bench(&args.preset, effective_seed(args.seed)?, args.limit)?;
            match &args.out {
                Some(path) => {
                    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                    commands::write_bench(BufWriter::new(file), &rows)?;
                }
                None => commands::write_bench(std::io::stdout().lock(), &rows)?,
            }
            Ok(0)
        }
        Command::ListProblems => {
            let mut out = std::io::stdout().lock();
            for line in commands::list_problems()? {
                writeln!(out, "{line}")?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
