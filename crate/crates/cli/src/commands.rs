//! The subcommands, independent of argument parsing.

use std::io::Write;

use anyhow::{bail, Context, Result};
use gapvi::diagnostics::{
    estimate_lipschitz, estimate_peb_constant, estimate_seb_constant, lipschitz_bound, minty_violation_search,
    monotonicity_probe, restricted_strong_monotonicity_probe, run_property_suite, SampleRegion, SuiteConfig,
};
use gapvi::homotopy::{monotone_anchor, solve_homotopy, solve_homotopy_with, HomotopyStatus, PathEntry};
use gapvi::library::{self, CostPreset};
use gapvi::prox::{co_step, solve_pg, SolverConfig, Status};
use gapvi::{GapEvaluator, VIProblem};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SolverKind};
use crate::trace::TraceRow;

/// Iterates beyond this norm count as diverged.
const DIVERGENCE_BOUND: f64 = 1e12;

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::SolvedVIP => 0,
        Status::StationaryNotSolved => 2,
        Status::MaxIters | Status::Diverged => 3,
    }
}

/// Homotopy outcomes in terms of the PG statuses: a stalled inner loop is a
/// stationary failure, an exhausted outer budget an iteration limit.
pub fn homotopy_status(status: HomotopyStatus) -> Status {
    match status {
        HomotopyStatus::SolvedVIP => Status::SolvedVIP,
        HomotopyStatus::StalledInner => Status::StationaryNotSolved,
        HomotopyStatus::MaxOuter => Status::MaxIters,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub problem: String,
    pub status: Status,
    pub exit_code: u8,
    pub final_x: Vec<f64>,
    pub final_gap: f64,
    pub iterations: usize,
    pub input_hash: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homotopy_path: Option<Vec<PathEntry>>,
    pub warnings: Vec<String>,
}

pub struct SolveOutcome {
    pub summary: SolveSummary,
    pub rows: Vec<TraceRow>,
}

pub fn solve(problem: &VIProblem, config: &RunConfig) -> Result<SolveOutcome> {
    let x0 = DVector::from_column_slice(&config.x0);
    let (status, final_x, final_gap, iterations, rows, path, warnings) = match config.solver {
        SolverKind::Pg => {
            let r = solve_pg(problem, &config.pg, &x0)?;
            let rows = r.trace.records.iter().map(|rec| TraceRow::from_record(rec, 0.0)).collect();
            (r.status, r.final_x, r.final_gap, r.iterations, rows, None, r.warnings)
        }
        SolverKind::Homotopy => {
            let hc = config.homotopy.as_ref().context("homotopy settings missing")?;
            let r = match &config.x0_spec {
                Some(_) => solve_homotopy_with(problem, hc, &monotone_anchor(problem.dim()), Some(&x0))?,
                None => solve_homotopy(problem, hc)?,
            };
            let rows = r.trace.records.iter().map(|rec| TraceRow::from_record(rec, 0.0)).collect();
            let status = homotopy_status(r.status);
            (status, r.final_x, r.final_gap, r.total_inner_iterations, rows, Some(r.path), r.warnings)
        }
        SolverKind::Co => {
            let co = config.co.as_ref().context("consensus settings missing")?;
            let (status, x, gap, k, rows) = run_co_traced(problem, &config.pg, co.variant, co.tol, x0)?;
            (status, x.as_slice().to_vec(), gap, k, rows, None, Vec::new())
        }
    };
    let summary = SolveSummary {
        problem: problem.name().to_string(),
        status,
        exit_code: exit_code(status),
        final_x,
        final_gap,
        iterations,
        input_hash: config.content_hash()?,
        config: config.clone(),
        homotopy_path: path,
        warnings,
    };
    Ok(SolveOutcome { summary, rows })
}

/// Consensus iteration with the gap, step and distance recorded per step.
fn run_co_traced(
    problem: &VIProblem,
    pg: &SolverConfig,
    variant: gapvi::prox::CoVariant,
    tol: f64,
    mut x: DVector<f64>,
) -> Result<(Status, DVector<f64>, f64, usize, Vec<TraceRow>)> {
    let ev = GapEvaluator::new(problem, pg.lambda)?;
    let mut rows = Vec::new();
    for k in 0..=pg.max_iters {
        let residual = problem.eval_f(&x).norm();
        if !residual.is_finite() || x.norm() > DIVERGENCE_BOUND {
            return Ok((Status::Diverged, x, f64::NAN, k, rows));
        }
        let gap = ev.gap_value(&x)?;
        let next = co_step(problem, pg.lambda, pg.alpha, &x, variant)?;
        rows.push(TraceRow {
            k,
            gap,
            step_norm: (&next - &x).norm(),
            dist_to_solution: problem.solutions().distance(&x),
            t: 0.0,
        });
        if residual <= tol {
            return Ok((Status::SolvedVIP, x, gap, k, rows));
        }
        if k == pg.max_iters {
            return Ok((Status::MaxIters, x, gap, k, rows));
        }
        x = next;
    }
    unreachable!("the loop returns at k == max_iters")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Proposition and descent-lemma inequalities.
    Proposition,
    /// Minty violation search against the listed solutions.
    Minty,
    /// Sampled monotonicity of `F`.
    Monotonicity,
    /// Restricted strong monotonicity toward the solution set.
    Rsm,
    /// Lipschitz bound and sampled estimate of the gap gradient.
    Lipschitz,
    /// Level-set error-bound constants.
    ErrorBound,
}

pub struct DiagnoseSettings {
    pub lambda: f64,
    pub alpha: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub nu: f64,
    pub tol: f64,
}

/// Runs a suite; the flag is false when the proposition suite finds
/// violations.
pub fn diagnose(problem: &VIProblem, suite: Suite, s: &DiagnoseSettings) -> Result<(serde_json::Value, bool)> {
    let region = SampleRegion::for_problem(problem, s.samples, s.seed);
    let lipschitz = || lipschitz_bound(problem, s.lambda);
    let alpha = |l: f64| s.alpha.unwrap_or(if l > 0.0 { 0.9 / l } else { 1.0 });
    let head = json!({ "problem": problem.name(), "suite": format!("{suite:?}").to_lowercase(), "samples": s.samples, "seed": s.seed });
    let (body, ok) = match suite {
        Suite::Proposition => {
            let l = lipschitz()?;
            let mut cfg = SuiteConfig::new(s.lambda, alpha(l));
            cfg.lipschitz = Some(l);
            let report = run_property_suite(problem, &cfg, &region)?;
            let ok = report.total_violations() == 0;
            (json!({ "report": report, "violations": report.total_violations() }), ok)
        }
        Suite::Minty => {
            let candidates = problem.solutions().representatives();
            if candidates.is_empty() {
                bail!("`{}` lists no solutions to test", problem.name());
            }
            let witness = minty_violation_search(problem, &candidates, &region, s.tol)?;
            let listed: Vec<Vec<f64>> = candidates.iter().map(|c| c.as_slice().to_vec()).collect();
            (json!({ "candidates": listed, "non_minty": witness.is_some(), "witness": witness }), true)
        }
        Suite::Monotonicity => {
            let report = monotonicity_probe(problem, &region)?;
            (json!({ "non_monotone": report.certifies_non_monotone(), "report": report }), true)
        }
        Suite::Rsm => {
            let report = restricted_strong_monotonicity_probe(problem, problem.solutions(), &region)?;
            (json!({ "report": report }), true)
        }
        Suite::Lipschitz => {
            let ev = GapEvaluator::new(problem, s.lambda)?;
            let bound = lipschitz()?;
            let estimate = estimate_lipschitz(&ev, &region)?;
            (json!({ "lambda": s.lambda, "step_bound": bound, "sampled_estimate": estimate }), true)
        }
        Suite::ErrorBound => {
            let ev = GapEvaluator::new(problem, s.lambda)?;
            let a = alpha(lipschitz()?);
            let peb = estimate_peb_constant(&ev, a, problem.solutions(), s.nu, &region)?;
            let seb = estimate_seb_constant(&ev, problem.solutions(), s.nu, &region)?;
            (json!({ "lambda": s.lambda, "alpha": a, "nu": s.nu, "peb": peb, "seb": seb }), true)
        }
    };
    let mut out = head;
    out.as_object_mut().expect("object").extend(body.as_object().expect("object").clone());
    Ok((out, ok))
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub solver: String,
    pub status: Status,
    pub exit_code: u8,
    pub final_gap: f64,
    pub iterations: usize,
}

pub const BENCH_PRESETS: [&str; 1] = ["bimatrix_grid"];

/// Runs PG from the barycenter and the homotopy on each instance of the
/// preset, in grid order. `limit` keeps only the first instances.
pub fn bench(preset: &str, seed: u64, limit: Option<usize>) -> Result<Vec<BenchRow>> {
    let games = match preset {
        "bimatrix_grid" => library::bench_grid(seed),
        "" => bail!("empty benchmark preset"),
        other => bail!("unknown benchmark preset `{other}` (known: {})", BENCH_PRESETS.join(", ")),
    };
    let mut rows = Vec::new();
    for (name, game) in games.into_iter().take(limit.unwrap_or(usize::MAX)) {
        let p = library::make_bimatrix(&game);
        let lambda = p.recommended_lambda();
        let pg_cfg = SolverConfig::recommended(&p, lambda)?;
        let ev = GapEvaluator::new(&p, lambda)?;
        let pg = solve_pg(&p, &pg_cfg, &p.feasible_set().reference_point())?;
        let h = solve_homotopy(&p, &gapvi::HomotopyConfig::new(pg_cfg))?;
        let h_status = homotopy_status(h.status);
        rows.push(BenchRow {
            instance: name.clone(),
            solver: "pg".into(),
            status: pg.status,
            exit_code: exit_code(pg.status),
            final_gap: pg.final_gap,
            iterations: pg.iterations,
        });
        rows.push(BenchRow {
            instance: name,
            solver: "homotopy".into(),
            status: h_status,
            exit_code: exit_code(h_status),
            final_gap: ev.gap_value(&h.final_point())?,
            iterations: h.total_inner_iterations,
        });
    }
    Ok(rows)
}

pub fn write_bench<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// One line per builtin: name, size, recommended `lambda` and the step
/// `0.9 / L` at that `lambda`.
pub fn list_problems() -> Result<Vec<String>> {
    library::BUILTIN_NAMES
        .iter()
        .map(|name| {
            let p = library::builtin(name)?;
            let lambda = p.recommended_lambda();
            let l = lipschitz_bound(&p, lambda)?;
            let alpha = if l > 0.0 { 0.9 / l } else { 1.0 };
            let size = if *name == "nguyen_dupuis" {
                let links = library::nguyen_dupuis_network(CostPreset::UniformOnes).links().len();
                format!("links={links} d={}", p.dim())
            } else {
                format!("d={}", p.dim())
            };
            Ok(format!("{name} {size} lambda={lambda} alpha={alpha:.4e}"))
        })
        .collect()
}
