//! Homotopy continuation on the gap reformulation.
//!
//! The operator is deformed to `F_t = t H + (1 - t) F` with a strongly
//! monotone anchor `H`. Starting from the solution of the `t = 1` problem,
//! each outer step probes `t_i = t (1 - delta^i)` for `i = 1, 2, ...` and
//! warm-starts proximal gradient from the current point; the first probe
//! whose gap reaches `eps_gap_inner` is accepted. Once `t` falls below
//! `t_floor` a final solve at `t = 0` decides the outcome.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diagnostics::lipschitz_bound;
use crate::error::{Error, Result};
use crate::gap::HomotopyMap;
use crate::problem::{Mapping, VIProblem};
use crate::prox::{solve_pg_with_t, SolverConfig, SolverResult, Status, Trace};

/// Cap on trace records kept per accepted inner solve.
pub const TRACE_RECORDS_PER_SOLVE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyConfig {
    pub delta: f64,
    pub inner: SolverConfig,
    /// Gap at which a deformed problem counts as solved.
    pub eps_gap_inner: f64,
    /// Below this, `t` snaps to zero.
    pub t_floor: f64,
    pub max_outer: usize,
    /// Largest probe index `i` per outer step.
    pub max_inner_i: usize,
    /// Recompute the step size of each deformed problem from its own
    /// Lipschitz bound instead of reusing `inner.alpha`.
    pub recompute_alpha: bool,
}

impl HomotopyConfig {
    pub fn new(inner: SolverConfig) -> Self {
        Self {
            delta: 0.5,
            inner,
            eps_gap_inner: 1e-10,
            t_floor: 1e-8,
            max_outer: 1_000,
            max_inner_i: 30,
            recompute_alpha: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::BadParameters(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.t_floor > 0.0 && self.t_floor < 1.0) {
            return Err(Error::BadParameters(format!("t_floor must lie in (0, 1), got {}", self.t_floor)));
        }
        if self.eps_gap_inner < 0.0 || self.max_outer == 0 || self.max_inner_i == 0 {
            return Err(Error::BadParameters("homotopy budgets and tolerances must be positive".into()));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HomotopyStatus {
    SolvedVIP,
    StalledInner,
    MaxOuter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub t: f64,
    pub x: Vec<f64>,
    /// Gap of the deformed problem at `x`.
    pub gap: f64,
    pub inner_iterations: usize,
    pub inner_status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyResult {
    pub status: HomotopyStatus,
    pub final_x: Vec<f64>,
    /// Gap of the last solve; at `t = 0` this is the gap of the original problem.
    pub final_gap: f64,
    pub final_t: f64,
    /// Accepted points, with strictly decreasing `t`.
    pub path: Vec<PathEntry>,
    pub total_inner_iterations: usize,
    pub rejected_probes: usize,
    /// Inner traces of the accepted solves, thinned, with iteration numbers
    /// counted over all inner solves.
    pub trace: Trace,
    pub warnings: Vec<String>,
}

impl HomotopyResult {
    pub fn final_point(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.final_x)
    }
}

/// The identity anchor `H(x) = x`.
pub fn monotone_anchor(dim: usize) -> Mapping {
    Mapping::linear(DMatrix::identity(dim, dim)).expect("square identity")
}

/// The anchor `H(x) = x - center`, whose zero is `center`.
pub fn centered_anchor(center: &DVector<f64>) -> Mapping {
    let n = center.len();
    Mapping::affine(DMatrix::identity(n, n), -center).expect("consistent shapes")
}

/// Homotopy from the identity anchor and the set's reference point.
pub fn solve_homotopy(problem: &VIProblem, config: &HomotopyConfig) -> Result<HomotopyResult> {
    solve_homotopy_with(problem, config, &monotone_anchor(problem.dim()), None)
}

/// Homotopy with an explicit anchor and an optional start for the `t = 1`
/// solve (the set's reference point by default).
pub fn solve_homotopy_with(
    problem: &VIProblem,
    config: &HomotopyConfig,
    anchor: &Mapping,
    x0: Option<&DVector<f64>>,
) -> Result<HomotopyResult> {
    config.validate()?;
    let mut warnings = Vec::new();
    if !problem.mapping().is_affine() {
        warnings.push("mapping is not affine: convergence of the continuation is outside the covered theory".to_string());
    }
    let mut state = Run {
        problem,
        config,
        anchor,
        trace: Trace::default(),
        total_iterations: 0,
        rejected: 0,
    };

    let start = x0.cloned().unwrap_or_else(|| problem.feasible_set().reference_point());
    let first = state.solve_at(1.0, &start)?;
    warnings.extend(first.result.warnings.iter().cloned());
    state.keep(&first);
    let mut path = vec![entry(1.0, &first)];
    let mut x = first.result.final_point();
    let mut t = 1.0;
    if !first.solved {
        return Ok(state.finish(HomotopyStatus::StalledInner, x, first.result.final_gap, t, path, warnings));
    }

    for _ in 0..config.max_outer {
        if t < config.t_floor {
            let last = state.solve_at(0.0, &x)?;
            state.keep(&last);
            path.push(entry(0.0, &last));
            let status = if last.solved {
                HomotopyStatus::SolvedVIP
            } else {
                HomotopyStatus::StalledInner
            };
            return Ok(state.finish(status, last.result.final_point(), last.result.final_gap, 0.0, path, warnings));
        }
        let mut accepted = None;
        for i in 1..=config.max_inner_i {
            let t_i = t * (1.0 - config.delta.powi(i as i32));
            if t_i >= t {
                break;
            }
            let probe = state.solve_at(t_i, &x)?;
            if probe.solved {
                accepted = Some((t_i, probe));
                break;
            }
            log::debug!("probe t = {t_i:.3e} rejected with gap {:.3e}", probe.result.final_gap);
            state.rejected += 1;
        }
        let Some((t_next, probe)) = accepted else {
            let gap = path.last().map_or(f64::NAN, |p| p.gap);
            return Ok(state.finish(HomotopyStatus::StalledInner, x, gap, t, path, warnings));
        };
        state.keep(&probe);
        path.push(entry(t_next, &probe));
        x = probe.result.final_point();
        t = t_next;
    }
    let gap = path.last().map_or(f64::NAN, |p| p.gap);
    Ok(state.finish(HomotopyStatus::MaxOuter, x, gap, t, path, warnings))
}

struct Solve {
    result: SolverResult,
    /// Inner iterations spent before this solve.
    offset: usize,
    solved: bool,
}

fn entry(t: f64, solve: &Solve) -> PathEntry {
    PathEntry {
        t,
        x: solve.result.final_x.clone(),
        gap: solve.result.final_gap,
        inner_iterations: solve.result.iterations,
        inner_status: solve.result.status,
    }
}

struct Run<'a> {
    problem: &'a VIProblem,
    config: &'a HomotopyConfig,
    anchor: &'a Mapping,
    trace: Trace,
    total_iterations: usize,
    rejected: usize,
}

impl Run<'_> {
    fn solve_at(&mut self, t: f64, x: &DVector<f64>) -> Result<Solve> {
        let deformed = HomotopyMap::new(self.problem, self.anchor.clone(), t).deform()?;
        let mut cfg = self.config.inner.clone();
        cfg.eps_gap = self.config.eps_gap_inner;
        cfg.record_iterates = false;
        if self.config.recompute_alpha {
            let lipschitz = lipschitz_bound(&deformed, cfg.lambda)?;
            if lipschitz > 0.0 {
                cfg.alpha = 0.9 / lipschitz;
            }
        }
        let result = solve_pg_with_t(&deformed, &cfg, x, Some(t))?;
        let offset = self.total_iterations;
        self.total_iterations += result.iterations + 1;
        Ok(Solve {
            solved: result.status == Status::SolvedVIP,
            offset,
            result,
        })
    }

    /// Appends the inner trace of `solve`, thinned to `TRACE_RECORDS_PER_SOLVE`
    /// records, with iteration numbers counted over all inner solves.
    fn keep(&mut self, solve: &Solve) {
        let records = &solve.result.trace.records;
        let stride = records.len().div_ceil(TRACE_RECORDS_PER_SOLVE).max(1);
        for (i, record) in records.iter().enumerate() {
            if i % stride == 0 || i + 1 == records.len() {
                let mut record = record.clone();
                record.k += solve.offset;
                self.trace.records.push(record);
            }
        }
        self.trace.increases.extend(solve.result.trace.increases.iter().map(|k| k + solve.offset));
    }

    fn finish(
        self,
        status: HomotopyStatus,
        x: DVector<f64>,
        final_gap: f64,
        final_t: f64,
        path: Vec<PathEntry>,
        warnings: Vec<String>,
    ) -> HomotopyResult {
        HomotopyResult {
            status,
            final_x: x.as_slice().to_vec(),
            final_gap,
            final_t,
            path,
            total_inner_iterations: self.total_iterations,
            rejected_probes: self.rejected,
            trace: self.trace,
            warnings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap::GapEvaluator;
    use crate::library;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn anchors() {
        assert_eq!(monotone_anchor(1).eval(&v(&[3.0])), v(&[3.0]));
        assert_eq!(monotone_anchor(2).eval(&v(&[1.0, -1.0])), v(&[1.0, -1.0]));
        assert_eq!(centered_anchor(&v(&[1.0, 0.0])).eval(&v(&[1.0, 0.0])), v(&[0.0, 0.0]));
    }

    #[test]
    fn example_1_2_is_solved() {
        let p = library::example_1_2();
        let config = HomotopyConfig::new(SolverConfig::new(1.0, 0.1));
        let result = solve_homotopy(&p, &config).unwrap();
        assert_eq!(result.status, HomotopyStatus::SolvedVIP);
        assert!(result.final_gap <= 1e-10);
        let x = result.final_x[0];
        assert!([-1.0, 0.0, 1.0].iter().any(|s| (x - s).abs() <= 1e-5), "{x}");
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert!(ev.gap_value(&result.final_point()).unwrap() <= 1e-9);
    }

    #[test]
    fn path_decreases_with_first_probe_ratio() {
        let p = library::bimatrix_textbook();
        let config = HomotopyConfig::new(SolverConfig::new(0.5, 0.1));
        let result = solve_homotopy(&p, &config).unwrap();
        assert_eq!(result.status, HomotopyStatus::SolvedVIP);
        assert_eq!(result.path[1].t, 0.5);
        for pair in result.path.windows(2) {
            assert!(pair[1].t < pair[0].t);
            if pair[1].t > 0.0 {
                assert!(pair[1].t / pair[0].t <= 1.0 - config.delta + 1e-15);
            }
        }
        let again = solve_homotopy(&p, &config).unwrap();
        assert_eq!(again.path, result.path);
        assert_eq!(again.final_x, result.final_x);
    }

    #[test]
    fn bad_delta_is_rejected() {
        let p = library::example_1_2();
        let mut config = HomotopyConfig::new(SolverConfig::new(1.0, 0.1));
        config.delta = 1.0;
        assert!(solve_homotopy(&p, &config).is_err());
    }
}
