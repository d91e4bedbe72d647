//! Regularized (Fukushima) gap function
//!
//! ```text
//! g(x) = max_{y in X} <F(x), x - y> - |x - y|^2 / (2 lambda)
//! ```
//!
//! whose maximizer is `y(x) = Proj_X(x - lambda F(x))` and whose gradient is
//! `F(x) + JF(x)^T (x - y(x)) + (y(x) - x) / lambda`. On `X`, `g >= 0` and
//! `g(x) = 0` exactly at the solutions of the variational inequality.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::{Mapping, VIProblem};

/// Relative slack allowed on the nonnegativity of the gap.
const NONNEG_SLACK: f64 = 1e-12;

/// Gap quantities at one point, sharing a single evaluation of `F`.
#[derive(Debug, Clone)]
pub struct GapPoint {
    pub f: DVector<f64>,
    pub y: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
}

/// The gap function of one problem at a fixed `lambda > 0`.
#[derive(Debug, Clone, Copy)]
pub struct GapEvaluator<'a> {
    problem: &'a VIProblem,
    lambda: f64,
}

impl<'a> GapEvaluator<'a> {
    pub fn new(problem: &'a VIProblem, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::BadParameters(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { problem, lambda })
    }

    pub fn problem(&self) -> &'a VIProblem {
        self.problem
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `Proj_X(x - lambda F(x))`.
    pub fn y_lambda(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.problem.eval_f(x);
        self.problem.feasible_set().project(&(x - f * self.lambda))
    }

    fn check_feasible(&self, x: &DVector<f64>) -> Result<()> {
        let set = self.problem.feasible_set();
        if x.len() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: x.len(),
            });
        }
        if !set.contains(x, set.proj_tol()) {
            return Err(Error::InfeasiblePoint {
                violation: set.violation(x),
            });
        }
        Ok(())
    }

    fn value_from(&self, x: &DVector<f64>, f: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let r = x - y;
        let linear = f.dot(&r);
        let quad = r.norm_squared() / (2.0 * self.lambda);
        let value = linear - quad;
        debug_assert!(
            value >= -NONNEG_SLACK * (1.0 + linear.abs() + quad),
            "gap {value} negative at a feasible point"
        );
        value
    }

    pub fn gap_value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_feasible(x)?;
        let f = self.problem.eval_f(x);
        let y = self.problem.feasible_set().project(&(x - &f * self.lambda))?;
        Ok(self.value_from(x, &f, &y))
    }

    pub fn gap_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.evaluate(x)?.gradient)
    }

    /// Value, maximizer and gradient at a feasible point.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<GapPoint> {
        self.check_feasible(x)?;
        let f = self.problem.eval_f(x);
        let y = self.problem.feasible_set().project(&(x - &f * self.lambda))?;
        let value = self.value_from(x, &f, &y);
        let r = x - &y;
        let gradient = &f + self.problem.mapping().jacobian_tr_mul(x, &r) - &r / self.lambda;
        Ok(GapPoint { f, y, value, gradient })
    }
}

/// D-gap `g_{lambda1}(x) - g_{lambda2}(x)` for `lambda1 > lambda2`.
pub fn d_gap_value(ev1: &GapEvaluator<'_>, ev2: &GapEvaluator<'_>, x: &DVector<f64>) -> Result<f64> {
    if ev1.lambda <= ev2.lambda {
        return Err(Error::BadParameters(format!(
            "D-gap needs lambda1 > lambda2, got {} <= {}",
            ev1.lambda, ev2.lambda
        )));
    }
    if !std::ptr::eq(ev1.problem, ev2.problem) {
        return Err(Error::BadParameters("D-gap evaluators must share one problem".into()));
    }
    Ok(ev1.gap_value(x)? - ev2.gap_value(x)?)
}

/// Deformation `F_t = t H + (1 - t) F` of a base problem toward an anchor `H`.
#[derive(Debug, Clone)]
pub struct HomotopyMap<'a> {
    pub base: &'a VIProblem,
    pub anchor: Mapping,
    pub t: f64,
}

impl<'a> HomotopyMap<'a> {
    pub fn new(base: &'a VIProblem, anchor: Mapping, t: f64) -> Self {
        Self { base, anchor, t }
    }

    /// The deformed problem over the same feasible set. The endpoints return
    /// the base and anchor operators unchanged.
    pub fn deform(&self) -> Result<VIProblem> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::BadParameters(format!("homotopy parameter {} outside [0, 1]", self.t)));
        }
        if self.anchor.dim() != self.base.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.base.dim(),
                got: self.anchor.dim(),
            });
        }
        let mapping = if self.t == 0.0 {
            self.base.mapping().clone()
        } else if self.t == 1.0 {
            self.anchor.clone()
        } else {
            Mapping::combine(self.t, &self.anchor, 1.0 - self.t, self.base.mapping())
        };
        Ok(self
            .base
            .with_mapping(format!("{}@t={}", self.base.name(), self.t), mapping))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn y_lambda_examples() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(ev.y_lambda(&s(0.4)).unwrap()[0], 0.8, epsilon = 1e-15);
        assert_eq!(ev.y_lambda(&s(1.0)).unwrap()[0], 1.0);
    }

    #[test]
    fn gap_value_examples() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(ev.gap_value(&s(0.4)).unwrap(), 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.gap_value(&s(1.0)).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.gap_value(&s(0.75)).unwrap(), 0.15625, epsilon = 1e-15);
    }

    #[test]
    fn gap_value_matches_grid_maximization() {
        // independent oracle: maximize the inner objective over a fine grid of y
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        for &x in &[0.75, -0.3, 0.9] {
            let n = 1_000_000;
            let best = (0..=n)
                .map(|i| -1.0 + 2.0 * i as f64 / n as f64)
                .map(|y| -x * (x - y) - 0.5 * (x - y) * (x - y))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_abs_diff_eq!(ev.gap_value(&s(x)).unwrap(), best, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_examples() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(ev.gap_gradient(&s(0.4)).unwrap()[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.gap_gradient(&s(2.0 / 3.0)).unwrap()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.gap_gradient(&s(-0.75)).unwrap()[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn infeasible_points_are_rejected() {
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        assert!(matches!(ev.gap_value(&s(1.5)), Err(Error::InfeasiblePoint { .. })));
        assert!(GapEvaluator::new(&p, 0.0).is_err());
    }

    #[test]
    fn d_gap_examples() {
        let p = library::example_1_2();
        let ev2 = GapEvaluator::new(&p, 2.0).unwrap();
        let ev1 = GapEvaluator::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(d_gap_value(&ev2, &ev1, &s(0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(d_gap_value(&ev2, &ev1, &s(0.4)).unwrap(), 0.07, epsilon = 1e-14);
        assert!(matches!(d_gap_value(&ev1, &ev2, &s(0.4)), Err(Error::BadParameters(_))));

        let game = library::bimatrix_textbook();
        let x_star = DVector::from_column_slice(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        let a = GapEvaluator::new(&game, 1.0).unwrap();
        let b = GapEvaluator::new(&game, 0.5).unwrap();
        assert_abs_diff_eq!(d_gap_value(&a, &b, &x_star).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn deform_endpoints_and_midpoint() {
        let p = library::example_1_2();
        let identity = Mapping::linear(DMatrix::identity(1, 1)).unwrap();
        let x = s(0.37);
        let at0 = HomotopyMap::new(&p, identity.clone(), 0.0).deform().unwrap();
        assert_eq!(at0.eval_f(&x), p.eval_f(&x));
        let at1 = HomotopyMap::new(&p, identity.clone(), 1.0).deform().unwrap();
        assert_eq!(at1.eval_f(&x), x);
        let half = HomotopyMap::new(&p, identity.clone(), 0.5).deform().unwrap();
        assert_eq!(half.eval_f(&x)[0], 0.0);
        let ev = GapEvaluator::new(&half, 1.0).unwrap();
        assert_eq!(ev.gap_value(&x).unwrap(), 0.0);
        assert!(HomotopyMap::new(&p, identity, 1.5).deform().is_err());
    }
}
