//! Proximal gradient on composite objectives `f + indicator_X`, with the gap
//! function as the main instance of `f`.
//!
//! For a step `alpha`, the forward-backward map is
//! `T(x) = Proj_X(x - alpha grad f(x))`, the proximal gap is
//! `G(x) = -(1/alpha) [<grad f(x), T(x) - x> + |x - T(x)|^2 / (2 alpha)]`, and
//! the proximal envelope is `E(x) = f(x) - alpha G(x)`.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::GapEvaluator;
use crate::problem::VIProblem;
use crate::set::FeasibleSet;

/// Iterates whose gap or norm exceed this are declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;
/// Full iterate snapshots are kept in traces up to this dimension.
pub const SNAPSHOT_MAX_DIM: usize = 64;
const MAX_BACKTRACKS: usize = 60;

/// Smooth part plus the indicator of a closed convex set.
pub trait CompositeObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)>;
    /// Proximal map of the nonsmooth part, a Euclidean projection here.
    fn prox(&self, z: &DVector<f64>) -> Result<DVector<f64>>;
}

impl CompositeObjective for GapEvaluator<'_> {
    fn dim(&self) -> usize {
        self.problem().dim()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.gap_value(x)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let point = self.evaluate(x)?;
        Ok((point.value, point.gradient))
    }

    fn prox(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.problem().feasible_set().project(z)
    }
}

/// The forward-backward quantities at one point.
#[derive(Debug, Clone)]
pub struct ProxPoint {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub next: DVector<f64>,
    pub step_norm: f64,
    /// `G_alpha(x)`
    pub prox_gap: f64,
    /// `E_alpha(x)`
    pub envelope: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::BadParameters(format!("step size must be positive, got {alpha}")));
    }
    Ok(())
}

pub fn prox_point<O: CompositeObjective + ?Sized>(obj: &O, alpha: f64, x: &DVector<f64>) -> Result<ProxPoint> {
    check_alpha(alpha)?;
    let (value, gradient) = obj.value_and_gradient(x)?;
    let next = obj.prox(&(x - &gradient * alpha))?;
    let d = &next - x;
    let step_sq = d.norm_squared();
    // the indicator terms vanish because both x and T(x) are feasible
    let model = gradient.dot(&d) + step_sq / (2.0 * alpha);
    Ok(ProxPoint {
        value,
        gradient,
        next,
        step_norm: step_sq.sqrt(),
        prox_gap: -model / alpha,
        envelope: value + model,
    })
}

/// `T_alpha(x)`, the proximal gradient step from a feasible point.
pub fn t_alpha<O: CompositeObjective + ?Sized>(obj: &O, alpha: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(prox_point(obj, alpha, x)?.next)
}

/// `G_alpha(x)`, nonnegative and zero exactly at fixed points of `T_alpha`.
pub fn g_alpha<O: CompositeObjective + ?Sized>(obj: &O, alpha: f64, x: &DVector<f64>) -> Result<f64> {
    Ok(prox_point(obj, alpha, x)?.prox_gap)
}

/// `E_alpha(x)`, the optimal value of the proximal subproblem.
pub fn e_alpha<O: CompositeObjective + ?Sized>(obj: &O, alpha: f64, x: &DVector<f64>) -> Result<f64> {
    Ok(prox_point(obj, alpha, x)?.envelope)
}

/// Largest `alpha0 * shrink^j` with
/// `f(T(x)) <= f(x) - (c_dec / alpha) |x - T(x)|^2`.
pub fn backtrack_alpha<O: CompositeObjective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    alpha0: f64,
    shrink: f64,
    c_dec: f64,
) -> Result<f64> {
    check_alpha(alpha0)?;
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::BadParameters(format!("shrink factor must lie in (0, 1), got {shrink}")));
    }
    let (value, gradient) = obj.value_and_gradient(x)?;
    let mut alpha = alpha0;
    for _ in 0..=MAX_BACKTRACKS {
        let next = obj.prox(&(x - &gradient * alpha))?;
        let step_sq = (&next - x).norm_squared();
        if step_sq == 0.0 || obj.value(&next)? <= value - c_dec / alpha * step_sq {
            return Ok(alpha);
        }
        alpha *= shrink;
    }
    Err(Error::NonConvergence {
        what: "backtracking line search",
        iterations: MAX_BACKTRACKS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    Backtracking { shrink: f64, c_dec: f64 },
}

impl StepRule {
    pub fn backtracking() -> Self {
        StepRule::Backtracking {
            shrink: 0.5,
            c_dec: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub step_rule: StepRule,
    pub lambda: f64,
    pub max_iters: usize,
    /// Declare a VI solution once the gap drops to this value.
    pub eps_gap: f64,
    /// Declare stationarity once `|x - T(x)|` drops to this value.
    pub eps_stat: f64,
    /// Weak-convexity modulus of the nonsmooth part (zero for indicators).
    pub rho: f64,
    /// Keep a copy of each iterate in the trace (only up to `SNAPSHOT_MAX_DIM`).
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            alpha,
            step_rule: StepRule::Fixed,
            lambda,
            max_iters: 100_000,
            eps_gap: 1e-12,
            eps_stat: 1e-13,
            rho: 0.0,
            record_iterates: true,
        }
    }

    /// `alpha = 0.9 / L` with `L` from [`crate::diagnostics::lipschitz_bound`].
    pub fn recommended(problem: &VIProblem, lambda: f64) -> Result<Self> {
        let lipschitz = crate::diagnostics::lipschitz_bound(problem, lambda)?;
        let alpha = if lipschitz > 0.0 { 0.9 / lipschitz } else { 1.0 };
        Ok(Self::new(lambda, alpha))
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.lambda > 0.0) {
            return Err(Error::BadParameters(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::BadParameters("max_iters must be positive".into()));
        }
        if self.eps_gap < 0.0 || self.eps_stat < 0.0 || self.rho < 0.0 {
            return Err(Error::BadParameters("tolerances and rho must be nonnegative".into()));
        }
        if self.rho > 0.0 && self.step_rule == StepRule::Fixed && self.alpha * self.rho >= 1.0 {
            return Err(Error::BadParameters(format!(
                "fixed step {} violates alpha < 1/rho = {}",
                self.alpha,
                1.0 / self.rho
            )));
        }
        if let StepRule::Backtracking { shrink, .. } = self.step_rule {
            if !(shrink > 0.0 && shrink < 1.0) {
                return Err(Error::BadParameters(format!("shrink factor must lie in (0, 1), got {shrink}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    SolvedVIP,
    StationaryNotSolved,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub gap: f64,
    pub step_norm: f64,
    /// Distance to the nearest listed solution: an upper bound on the
    /// distance to the solution set.
    pub dist_to_solution: Option<f64>,
    pub t: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub x_norm: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Iterations at which the gap increased beyond roundoff.
    pub increases: Vec<usize>,
}

impl Trace {
    fn push(&mut self, record: TraceRecord) {
        if let Some(prev) = self.records.last() {
            if record.gap > prev.gap + 1e-12 * prev.gap.abs().max(1.0) {
                self.increases.push(record.k);
            }
        }
        self.records.push(record);
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: Status,
    pub final_x: Vec<f64>,
    pub final_gap: f64,
    pub iterations: usize,
    pub trace: Trace,
    pub warnings: Vec<String>,
}

impl SolverResult {
    pub fn final_point(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.final_x)
    }
}

/// Proximal gradient on the gap reformulation `min_{x in X} g_lambda(x)`.
///
/// Stops with `SolvedVIP` once the gap is at most `eps_gap`, with
/// `StationaryNotSolved` once `|x - T(x)| <= eps_stat` while the gap is still
/// above `eps_gap`, and with `MaxIters` otherwise. The solved test runs first.
pub fn solve_pg(problem: &VIProblem, config: &SolverConfig, x0: &DVector<f64>) -> Result<SolverResult> {
    solve_pg_with_t(problem, config, x0, None)
}

pub(crate) fn solve_pg_with_t(
    problem: &VIProblem,
    config: &SolverConfig,
    x0: &DVector<f64>,
    t: Option<f64>,
) -> Result<SolverResult> {
    config.validate()?;
    let ev = GapEvaluator::new(problem, config.lambda)?;
    let set = problem.feasible_set();
    let mut warnings = Vec::new();
    let mut x = if set.contains(x0, set.proj_tol()) {
        x0.clone()
    } else {
        warnings.push(format!(
            "initial point violates the feasible set by {:.3e}; projected once",
            set.violation(x0)
        ));
        set.project(x0)?
    };

    let started = Instant::now();
    let mut trace = Trace::default();
    let solutions = problem.solutions();
    for k in 0..=config.max_iters {
        let (value, gradient) = ev.value_and_gradient(&x)?;
        let x_norm = x.norm();
        if !value.is_finite() || value > DIVERGENCE_BOUND || x_norm > DIVERGENCE_BOUND {
            return Ok(finish(Status::Diverged, x, value, k, trace, warnings));
        }
        let alpha = match config.step_rule {
            StepRule::Fixed => config.alpha,
            StepRule::Backtracking { shrink, c_dec } => backtrack_alpha(&ev, &x, config.alpha, shrink, c_dec)?,
        };
        let next = ev.prox(&(&x - &gradient * alpha))?;
        let step_norm = (&next - &x).norm();
        trace.push(TraceRecord {
            k,
            gap: value,
            step_norm,
            dist_to_solution: solutions.distance(&x),
            t,
            x: (config.record_iterates && x.len() <= SNAPSHOT_MAX_DIM).then(|| x.as_slice().to_vec()),
            x_norm,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        if value <= config.eps_gap {
            return Ok(finish(Status::SolvedVIP, x, value, k, trace, warnings));
        }
        if step_norm <= config.eps_stat {
            return Ok(finish(Status::StationaryNotSolved, x, value, k, trace, warnings));
        }
        if k == config.max_iters {
            return Ok(finish(Status::MaxIters, x, value, k, trace, warnings));
        }
        x = next;
    }
    unreachable!("the loop returns at k == max_iters")
}

fn finish(status: Status, x: DVector<f64>, gap: f64, iterations: usize, trace: Trace, warnings: Vec<String>) -> SolverResult {
    SolverResult {
        status,
        final_x: x.as_slice().to_vec(),
        final_gap: gap,
        iterations,
        trace,
        warnings,
    }
}

/// Update rule for unconstrained problems, where the gap gradient reduces to
/// `lambda JF^T F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoVariant {
    /// `x - alpha [lambda JF^T F - F]`
    Modified,
    /// `x - alpha lambda JF^T F`: gradient descent on `(lambda/2)|F|^2`.
    PureGap,
}

/// One consensus-optimization step.
pub fn co_step(problem: &VIProblem, lambda: f64, alpha: f64, x: &DVector<f64>, variant: CoVariant) -> Result<DVector<f64>> {
    if !matches!(problem.feasible_set(), FeasibleSet::FullSpace { .. }) {
        return Err(Error::BadParameters(
            "consensus optimization requires an unconstrained problem".into(),
        ));
    }
    let f = problem.eval_f(x);
    let jac = problem.eval_jacobian(x);
    let mut direction = jac.tr_mul(&f) * lambda;
    if variant == CoVariant::Modified {
        direction -= &f;
    }
    Ok(x - direction * alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoResult {
    pub final_x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(k, |F(x_k)|)` per iteration.
    pub residuals: Vec<(usize, f64)>,
}

/// Iterates [`co_step`] until `|F(x)| <= tol` or the budget runs out.
pub fn run_co(
    problem: &VIProblem,
    lambda: f64,
    alpha: f64,
    x0: &DVector<f64>,
    variant: CoVariant,
    max_iters: usize,
    tol: f64,
) -> Result<CoResult> {
    let mut x = x0.clone();
    let mut residuals = Vec::new();
    for k in 0..=max_iters {
        let residual = problem.eval_f(&x).norm();
        residuals.push((k, residual));
        if residual <= tol || !residual.is_finite() || k == max_iters {
            return Ok(CoResult {
                final_x: x.as_slice().to_vec(),
                residual,
                iterations: k,
                converged: residual <= tol,
                residuals,
            });
        }
        x = co_step(problem, lambda, alpha, &x, variant)?;
    }
    unreachable!("the loop returns at k == max_iters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_abs_diff_eq;

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    /// `x^2 / 2` on the real line, for exercising the step rule without any gap machinery.
    struct Quadratic;

    impl CompositeObjective for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> Result<f64> {
            Ok(0.5 * x.norm_squared())
        }
        fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
            Ok((0.5 * x.norm_squared(), x.clone()))
        }
        fn prox(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(z.clone())
        }
    }

    #[test]
    fn t_alpha_examples() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(t_alpha(&ev, 0.1, &s(0.4)).unwrap()[0], 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(t_alpha(&ev, 0.1, &s(2.0 / 3.0)).unwrap()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(t_alpha(&ev, 0.1, &s(1.0)).unwrap()[0], 1.0);
    }

    #[test]
    fn t_alpha_matches_grid_subproblem() {
        // minimize <g, y - x> + |y - x|^2 / (2 alpha) over a grid of [-1, 1]
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        let (x, alpha, grad) = (0.4, 0.1, 0.4);
        let n = 200_000;
        let best = (0..=n)
            .map(|i| -1.0 + 2.0 * i as f64 / n as f64)
            .min_by(|a, b| {
                let fa = grad * (a - x) + (a - x) * (a - x) / (2.0 * alpha);
                let fb = grad * (b - x) + (b - x) * (b - x) / (2.0 * alpha);
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        assert_abs_diff_eq!(t_alpha(&ev, alpha, &s(x)).unwrap()[0], best, epsilon = 1e-5);
    }

    #[test]
    fn prox_gap_and_envelope_examples() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(g_alpha(&ev, 0.1, &s(0.4)).unwrap(), 0.08, epsilon = 1e-14);
        assert_abs_diff_eq!(g_alpha(&ev, 0.1, &s(2.0 / 3.0)).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g_alpha(&ev, 0.7, &s(0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(e_alpha(&ev, 0.1, &s(0.4)).unwrap(), 0.072, epsilon = 1e-14);
        assert_abs_diff_eq!(e_alpha(&ev, 0.1, &s(0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(e_alpha(&ev, 0.1, &s(2.0 / 3.0)).unwrap(), 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn backtracking_examples() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert_eq!(backtrack_alpha(&ev, &s(0.4), 0.1, 0.5, 0.25).unwrap(), 0.1);
        assert_eq!(backtrack_alpha(&ev, &s(2.0 / 3.0), 0.1, 0.5, 0.25).unwrap(), 0.1);
        // for x^2/2 the test reduces to (1 - a)^2 <= 1 - a/2, i.e. a <= 1.5:
        // halving from 10 rejects 10, 5, 2.5 and accepts 1.25
        assert_eq!(backtrack_alpha(&Quadratic, &s(1.0), 10.0, 0.5, 0.25).unwrap(), 1.25);
        assert!(backtrack_alpha(&Quadratic, &s(1.0), 10.0, 1.5, 0.25).is_err());
    }

    #[test]
    fn pg_linear_rate_on_example_1_2() {
        let p = library::example_1_2();
        let result = solve_pg(&p, &SolverConfig::new(1.0, 0.1), &s(0.4)).unwrap();
        assert_eq!(result.status, Status::SolvedVIP);
        for pair in result.trace.records.windows(2) {
            let ratio = pair[1].dist_to_solution.unwrap() / pair[0].dist_to_solution.unwrap();
            assert_abs_diff_eq!(ratio, 0.9, epsilon = 1e-10);
        }
        assert!(result.trace.increases.is_empty());
    }

    #[test]
    fn pg_stalls_at_critical_point() {
        let p = library::example_1_2();
        let result = solve_pg(&p, &SolverConfig::new(1.0, 0.1), &s(2.0 / 3.0)).unwrap();
        assert_eq!(result.status, Status::StationaryNotSolved);
        assert_abs_diff_eq!(result.final_gap, 1.0 / 6.0, epsilon = 1e-10);
    }

    #[test]
    fn pg_projects_infeasible_start() {
        let p = library::example_1_2();
        let result = solve_pg(&p, &SolverConfig::new(1.0, 0.1), &s(3.0)).unwrap();
        assert_eq!(result.warnings.len(), 1);
        assert_eq!(result.status, Status::SolvedVIP);
    }

    #[test]
    fn pg_reports_divergence() {
        let p = library::monotone_control_unbounded();
        let mut cfg = SolverConfig::new(1.0, 50.0);
        cfg.max_iters = 10_000;
        let result = solve_pg(&p, &cfg, &s(1.0)).unwrap();
        assert_eq!(result.status, Status::Diverged);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(1.0, 0.5);
        cfg.rho = 4.0;
        assert!(cfg.validate().is_err());
        assert!(SolverConfig::new(0.0, 0.5).validate().is_err());
    }

    #[test]
    fn co_step_examples() {
        let gan = library::toy_gan(-2.0);
        let solution = DVector::from_column_slice(&[-2.0, 0.0]);
        assert_eq!(co_step(&gan, 1.0, 0.1, &solution, CoVariant::Modified).unwrap(), solution);
        let origin = DVector::from_column_slice(&[0.0, 0.0]);
        assert_eq!(co_step(&gan, 1.0, 0.0, &origin, CoVariant::Modified).unwrap(), origin);
        // finite-difference oracle for the step: grad of (lambda/2)|F|^2 at the origin
        let half_sq = |x: &DVector<f64>| 0.5 * gan.eval_f(x).norm_squared();
        let h = 1e-6;
        let fd: Vec<f64> = (0..2)
            .map(|j| {
                let mut a = origin.clone();
                let mut b = origin.clone();
                a[j] += h;
                b[j] -= h;
                (half_sq(&a) - half_sq(&b)) / (2.0 * h)
            })
            .collect();
        let stepped = co_step(&gan, 1.0, 0.1, &origin, CoVariant::PureGap).unwrap();
        assert_abs_diff_eq!(stepped[0], -0.1 * fd[0], epsilon = 1e-8);
        assert_abs_diff_eq!(stepped[1], -0.1 * fd[1], epsilon = 1e-8);
        assert!(co_step(&library::example_1_2(), 1.0, 0.1, &s(0.0), CoVariant::PureGap).is_err());
    }
}
