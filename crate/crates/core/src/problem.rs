//! Variational inequality problems: find `x* in X` with
//! `<F(x*), x - x*> >= 0` for every `x in X`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gap::GapEvaluator;
use crate::set::FeasibleSet;

pub type MapFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Gap tolerance used to validate listed solutions at construction.
pub const SOLUTION_CHECK_TOL: f64 = 1e-8;

/// The operator `F` of a variational inequality.
#[derive(Clone)]
pub enum Mapping {
    /// `F(x) = matrix * x + offset`.
    Affine {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    },
    /// General smooth map; without an analytic Jacobian, central finite
    /// differences are used.
    Smooth {
        dim: usize,
        eval: MapFn,
        jacobian: Option<JacFn>,
    },
}

impl Mapping {
    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: offset.len(),
            });
        }
        Ok(Mapping::Affine { matrix, offset })
    }

    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::affine(matrix, DVector::zeros(n))
    }

    pub fn smooth<F, J>(dim: usize, eval: F, jacobian: Option<J>) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Mapping::Smooth {
            dim,
            eval: Arc::new(eval),
            jacobian: jacobian.map(|j| Arc::new(j) as JacFn),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Mapping::Affine { offset, .. } => offset.len(),
            Mapping::Smooth { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Mapping::Affine { matrix, offset } => matrix * x + offset,
            Mapping::Smooth { eval, .. } => eval(x),
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        match self {
            Mapping::Affine { .. } => true,
            Mapping::Smooth { jacobian, .. } => jacobian.is_some(),
        }
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Mapping::Affine { matrix, .. } => matrix.clone(),
            Mapping::Smooth {
                jacobian: Some(jac), ..
            } => jac(x),
            Mapping::Smooth { jacobian: None, .. } => self.finite_difference_jacobian(x),
        }
    }

    /// `J(x)^T v` without copying the matrix of an affine map.
    pub fn jacobian_tr_mul(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Mapping::Affine { matrix, .. } => matrix.tr_mul(v),
            _ => self.jacobian(x).tr_mul(v),
        }
    }

    /// Central differences with step `eps^(1/3) * max(1, |x|)`.
    pub fn finite_difference_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = x.len();
        let h = f64::EPSILON.cbrt() * x.norm().max(1.0);
        let mut jac = DMatrix::zeros(n, n);
        let mut probe = x.clone();
        for j in 0..n {
            probe[j] = x[j] + h;
            let forward = self.eval(&probe);
            probe[j] = x[j] - h;
            let backward = self.eval(&probe);
            probe[j] = x[j];
            jac.set_column(j, &((forward - backward) / (2.0 * h)));
        }
        jac
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Mapping::Affine { .. })
    }

    /// `weight_a * a + weight_b * b`, kept affine when both parts are.
    pub fn combine(weight_a: f64, a: &Mapping, weight_b: f64, b: &Mapping) -> Mapping {
        match (a, b) {
            (
                Mapping::Affine {
                    matrix: ma,
                    offset: oa,
                },
                Mapping::Affine {
                    matrix: mb,
                    offset: ob,
                },
            ) => Mapping::Affine {
                matrix: ma * weight_a + mb * weight_b,
                offset: oa * weight_a + ob * weight_b,
            },
            _ => {
                let (fa, fb) = (a.clone(), b.clone());
                let (ja, jb) = (a.clone(), b.clone());
                Mapping::Smooth {
                    dim: a.dim(),
                    eval: Arc::new(move |x| fa.eval(x) * weight_a + fb.eval(x) * weight_b),
                    jacobian: Some(Arc::new(move |x| ja.jacobian(x) * weight_a + jb.jacobian(x) * weight_b)),
                }
            }
        }
    }
}

impl fmt::Debug for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mapping::Affine { matrix, .. } => write!(f, "Affine({}x{})", matrix.nrows(), matrix.ncols()),
            Mapping::Smooth { dim, jacobian, .. } => {
                write!(f, "Smooth(dim={dim}, analytic_jacobian={})", jacobian.is_some())
            }
        }
    }
}

/// A piece of a solution-set representation.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionPiece {
    Point(DVector<f64>),
    /// Closed segment between two endpoints.
    Segment(DVector<f64>, DVector<f64>),
    /// `{origin + s * direction : s >= 0}`.
    Ray {
        origin: DVector<f64>,
        direction: DVector<f64>,
    },
}

impl SolutionPiece {
    pub fn nearest(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SolutionPiece::Point(p) => p.clone(),
            SolutionPiece::Segment(a, b) => {
                let d = b - a;
                let len2 = d.norm_squared();
                if len2 == 0.0 {
                    return a.clone();
                }
                let s = ((x - a).dot(&d) / len2).clamp(0.0, 1.0);
                a + d * s
            }
            SolutionPiece::Ray { origin, direction } => {
                let len2 = direction.norm_squared();
                let s = ((x - origin).dot(direction) / len2).max(0.0);
                origin + direction * s
            }
        }
    }

    fn representatives(&self) -> Vec<DVector<f64>> {
        match self {
            SolutionPiece::Point(p) => vec![p.clone()],
            SolutionPiece::Segment(a, b) => vec![a.clone(), (a + b) * 0.5, b.clone()],
            SolutionPiece::Ray { origin, direction } => vec![origin.clone(), origin + direction],
        }
    }
}

/// Representation of (part of) the solution set. Distances computed from it
/// are upper bounds on the distance to the true solution set when only
/// representatives are listed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionSet {
    pieces: Vec<SolutionPiece>,
}

impl SolutionSet {
    pub fn new(pieces: Vec<SolutionPiece>) -> Self {
        Self { pieces }
    }

    pub fn points(points: impl IntoIterator<Item = DVector<f64>>) -> Self {
        Self::new(points.into_iter().map(SolutionPiece::Point).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[SolutionPiece] {
        &self.pieces
    }

    /// Nearest point of the representation to `x`.
    pub fn project(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.pieces
            .iter()
            .map(|p| p.nearest(x))
            .min_by(|a, b| {
                (a - x)
                    .norm()
                    .partial_cmp(&(b - x).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    pub fn distance(&self, x: &DVector<f64>) -> Option<f64> {
        self.project(x).map(|p| (p - x).norm())
    }

    /// Finite list of points on the representation (endpoints, midpoints).
    pub fn representatives(&self) -> Vec<DVector<f64>> {
        self.pieces.iter().flat_map(|p| p.representatives()).collect()
    }
}

/// Instance metadata that is not part of the mathematical problem.
#[derive(Debug, Clone, Default)]
pub struct ProblemMeta {
    /// Recommended gap parameter for this instance.
    pub recommended_lambda: Option<f64>,
    /// Stationary points of the gap reformulation that are not solutions.
    pub critical_points: Vec<DVector<f64>>,
    /// Gap value at the listed non-solution critical points.
    pub critical_gap: Option<f64>,
    /// Sampling box for unbounded feasible sets.
    pub sample_box: Option<(DVector<f64>, DVector<f64>)>,
    pub notes: Vec<String>,
}

/// Immutable variational inequality instance.
#[derive(Debug, Clone)]
pub struct VIProblem {
    name: String,
    mapping: Mapping,
    set: FeasibleSet,
    solutions: SolutionSet,
    meta: ProblemMeta,
}

impl VIProblem {
    pub fn new(name: impl Into<String>, mapping: Mapping, set: FeasibleSet) -> Result<Self> {
        if mapping.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: mapping.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            mapping,
            set,
            solutions: SolutionSet::default(),
            meta: ProblemMeta::default(),
        })
    }

    /// Attach known solutions; each representative must have
    /// `gap_value(1, x) <= 1e-8`.
    pub fn with_solutions(mut self, solutions: SolutionSet) -> Result<Self> {
        let ev = GapEvaluator::new(&self, 1.0)?;
        for x in solutions.representatives() {
            let gap = ev.gap_value(&x)?;
            if gap > SOLUTION_CHECK_TOL {
                return Err(Error::Validation(format!(
                    "listed solution {:?} of `{}` has gap {gap:.3e}",
                    x.as_slice(),
                    self.name
                )));
            }
        }
        self.solutions = solutions;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: ProblemMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn solutions(&self) -> &SolutionSet {
        &self.solutions
    }

    pub fn meta(&self) -> &ProblemMeta {
        &self.meta
    }

    pub fn recommended_lambda(&self) -> f64 {
        self.meta.recommended_lambda.unwrap_or(1.0)
    }

    pub fn eval_f(&self, x: &DVector<f64>) -> DVector<f64> {
        self.mapping.eval(x)
    }

    pub fn eval_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.mapping.jacobian(x)
    }

    /// Same feasible set, different operator; solutions are dropped.
    pub(crate) fn with_mapping(&self, name: String, mapping: Mapping) -> Self {
        Self {
            name,
            mapping,
            set: self.set.clone(),
            solutions: SolutionSet::default(),
            meta: ProblemMeta {
                sample_box: self.meta.sample_box.clone(),
                recommended_lambda: self.meta.recommended_lambda,
                ..ProblemMeta::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::BoxSet;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn fd_jacobian_matches_hand_derivative() {
        let map = Mapping::smooth(
            2,
            |x: &DVector<f64>| v(&[2.0 * x[0] * x[1], -x[0] * x[0]]),
            None::<fn(&DVector<f64>) -> DMatrix<f64>>,
        );
        let jac = map.jacobian(&v(&[1.0, -1.0]));
        let expected = DMatrix::from_row_slice(2, 2, &[-2.0, 2.0, -2.0, 0.0]);
        assert!((jac - expected).norm() < 1e-8);
    }

    #[test]
    fn combine_stays_affine() {
        let a = Mapping::linear(DMatrix::identity(2, 2)).unwrap();
        let b = Mapping::linear(DMatrix::from_element(2, 2, 3.0)).unwrap();
        let c = Mapping::combine(0.5, &a, 0.5, &b);
        assert!(c.is_affine());
        assert_abs_diff_eq!(c.eval(&v(&[1.0, 0.0]))[0], 2.0);
    }

    #[test]
    fn ray_and_segment_projection() {
        let set = SolutionSet::new(vec![
            SolutionPiece::Ray {
                origin: v(&[0.0, 0.0]),
                direction: v(&[0.0, -1.0]),
            },
            SolutionPiece::Segment(v(&[0.0, 1.0]), v(&[0.0, 10.0])),
        ]);
        assert_abs_diff_eq!(set.distance(&v(&[1.0, -3.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(set.distance(&v(&[-2.0, 12.0])).unwrap(), 8f64.sqrt());
    }

    #[test]
    fn rejects_false_solution() {
        let set = FeasibleSet::Box(BoxSet::new(v(&[-1.0]), v(&[1.0])).unwrap());
        let p = VIProblem::new("neg", Mapping::linear(DMatrix::from_element(1, 1, -1.0)).unwrap(), set).unwrap();
        assert!(p.clone().with_solutions(SolutionSet::points([v(&[0.5])])).is_err());
        assert!(p.with_solutions(SolutionSet::points([v(&[1.0]), v(&[0.0])])).is_ok());
    }
}
