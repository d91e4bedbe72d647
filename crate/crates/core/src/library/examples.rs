//! Small analytic instances with closed-form solution sets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{Mapping, ProblemMeta, SolutionPiece, SolutionSet, VIProblem};
use crate::set::{BoxSet, FeasibleSet, Halfspace, HalfspaceSet};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// `F(x) = -x` on `[-1, 1]`.
///
/// Solutions are `{-1, 0, 1}`. For `lambda = 1` the gap has the further
/// stationary points `+-2/3` with gap value `1/6`.
pub fn example_1_2() -> VIProblem {
    let mapping = Mapping::linear(DMatrix::from_element(1, 1, -1.0)).expect("1x1 matrix");
    let set = FeasibleSet::interval(-1.0, 1.0).expect("valid interval");
    VIProblem::new("example1_2", mapping, set)
        .and_then(|p| p.with_solutions(SolutionSet::points([v(&[-1.0]), v(&[1.0]), v(&[0.0])])))
        .expect("example 1.2 is well formed")
        .with_meta(ProblemMeta {
            recommended_lambda: Some(1.0),
            critical_points: vec![v(&[-2.0 / 3.0]), v(&[2.0 / 3.0])],
            critical_gap: Some(1.0 / 6.0),
            ..ProblemMeta::default()
        })
}

/// Piecewise closed form of the `lambda = 1` gap of [`example_1_2`].
pub fn closed_form_gap_example_1_2(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(if x > 0.5 {
        -1.5 * x * x + 2.0 * x - 0.5
    } else if x < -0.5 {
        -1.5 * x * x - 2.0 * x - 0.5
    } else {
        0.5 * x * x
    })
}

/// Derivative of [`closed_form_gap_example_1_2`].
pub fn closed_form_gap_gradient_example_1_2(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(if x > 0.5 {
        -3.0 * x + 2.0
    } else if x < -0.5 {
        -3.0 * x - 2.0
    } else {
        x
    })
}

/// `F(x) = (2 x1 x2, -x1^2)` on `R x (-inf, 0]`.
///
/// The solution set is the union of the rays `{0} x (-inf, 0]` and
/// `(-inf, 0] x {0}`.
pub fn example_1_3() -> VIProblem {
    let mapping = Mapping::smooth(
        2,
        |x: &DVector<f64>| v(&[2.0 * x[0] * x[1], -x[0] * x[0]]),
        Some(|x: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[2.0 * x[1], 2.0 * x[0], -2.0 * x[0], 0.0])),
    );
    let set = FeasibleSet::Box(BoxSet::new(v(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), v(&[f64::INFINITY, 0.0])).expect("valid box"));
    let rays = SolutionSet::new(vec![
        SolutionPiece::Ray {
            origin: v(&[0.0, 0.0]),
            direction: v(&[0.0, -1.0]),
        },
        SolutionPiece::Ray {
            origin: v(&[0.0, 0.0]),
            direction: v(&[-1.0, 0.0]),
        },
    ]);
    VIProblem::new("example1_3", mapping, set)
        .and_then(|p| p.with_solutions(rays))
        .expect("example 1.3 is well formed")
        .with_meta(ProblemMeta {
            recommended_lambda: Some(1.0),
            sample_box: Some((v(&[-2.0, -2.0]), v(&[2.0, 0.0]))),
            ..ProblemMeta::default()
        })
}

/// `F(x, y) = (2 x y^2, -2 x y)` on `{y >= 1, x + y <= 10}`.
///
/// Solutions form the segment `{0} x [1, 10]`, on which `F` is restricted
/// strongly monotone with modulus 2, so any `lambda > 1/4` is admissible.
/// No solution is a Minty solution: `<F(z), z - (0, c)> = 2 x y (x y - y + c)`
/// is negative at `(0.1, 10)` for `c < 9` and at `(-1, 1)` for `c > 2`.
///
/// The second component is `-2 x y`. With `-2 x^2 y` instead, the inner
/// product above becomes `2 x^2 y c >= 0` and every solution would be Minty.
pub fn example_4_1() -> VIProblem {
    let mapping = Mapping::smooth(
        2,
        |z: &DVector<f64>| v(&[2.0 * z[0] * z[1] * z[1], -2.0 * z[0] * z[1]]),
        Some(|z: &DVector<f64>| {
            let (x, y) = (z[0], z[1]);
            DMatrix::from_row_slice(2, 2, &[2.0 * y * y, 4.0 * x * y, -2.0 * y, -2.0 * x])
        }),
    );
    let rows = vec![Halfspace::new(v(&[0.0, -1.0]), -1.0), Halfspace::new(v(&[1.0, 1.0]), 10.0)];
    let set = HalfspaceSet::new(rows, None, v(&[0.0, 5.0])).expect("witness is feasible");
    let segment = SolutionSet::new(vec![SolutionPiece::Segment(v(&[0.0, 1.0]), v(&[0.0, 10.0]))]);
    VIProblem::new("example4_1", mapping, FeasibleSet::Halfspaces(set))
        .and_then(|p| p.with_solutions(segment))
        .expect("example 4.1 is well formed")
        .with_meta(ProblemMeta {
            recommended_lambda: Some(1.0),
            sample_box: Some((v(&[-3.0, 1.0]), v(&[9.0, 10.0]))),
            notes: vec!["restricted strong monotonicity modulus 2 requires lambda > 0.25".into()],
            ..ProblemMeta::default()
        })
}

/// Strongly monotone control `F(x) = x` on `[-1, 1]`.
pub fn monotone_control() -> VIProblem {
    let mapping = Mapping::linear(DMatrix::identity(1, 1)).expect("1x1 matrix");
    let set = FeasibleSet::interval(-1.0, 1.0).expect("valid interval");
    VIProblem::new("monotone_control", mapping, set)
        .and_then(|p| p.with_solutions(SolutionSet::points([v(&[0.0])])))
        .expect("control instance is well formed")
}

/// `F(x) = x` on the real line, the unconstrained variant of the control.
pub fn monotone_control_unbounded() -> VIProblem {
    let mapping = Mapping::linear(DMatrix::identity(1, 1)).expect("1x1 matrix");
    VIProblem::new("monotone_control_unbounded", mapping, FeasibleSet::FullSpace { dim: 1 })
        .and_then(|p| p.with_solutions(SolutionSet::points([v(&[0.0])])))
        .expect("control instance is well formed")
        .with_meta(ProblemMeta {
            sample_box: Some((v(&[-1.0]), v(&[1.0]))),
            ..ProblemMeta::default()
        })
}

/// `F = 0` on `[-1, 1]^dim`: every feasible point is a solution.
pub fn zero_map(dim: usize) -> VIProblem {
    let mapping = Mapping::linear(DMatrix::zeros(dim, dim)).expect("square matrix");
    let set = FeasibleSet::Box(BoxSet::new(DVector::from_element(dim, -1.0), DVector::from_element(dim, 1.0)).expect("valid box"));
    VIProblem::new("zero_map", mapping, set)
        .and_then(|p| p.with_solutions(SolutionSet::points([DVector::zeros(dim)])))
        .expect("zero map is well formed")
}
