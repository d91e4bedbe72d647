//! Closed convex feasible sets and their Euclidean projection oracles.
//!
//! Boxes and products of scaled simplices are projected in closed form.
//! Intersections of halfspaces (optionally with a box) use Dykstra's
//! alternating projections.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub const DEFAULT_PROJ_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_PROJ_ITERS: usize = 10_000;

/// Axis-aligned box `lower <= x <= upper`; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxSet {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(upper.iter()).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(Error::BadParameters(format!(
                    "box bound {i}: lower {l} exceeds upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            z.len(),
            z.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(&v, (&l, &u))| clamp(v, l, u)),
        )
    }

    fn violation(&self, z: &DVector<f64>) -> f64 {
        z.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }
}

// Infinite sides never bind.
fn clamp(v: f64, l: f64, u: f64) -> f64 {
    let mut out = v;
    if l.is_finite() && out < l {
        out = l;
    }
    if u.is_finite() && out > u {
        out = u;
    }
    out
}

/// One block `{h >= 0, sum(h) = mass}` over a contiguous coordinate range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexBlock {
    pub start: usize,
    pub len: usize,
    pub mass: f64,
}

impl SimplexBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Product of scaled simplices covering a prefix of the coordinates; any
/// remaining coordinates are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexProduct {
    dim: usize,
    blocks: Vec<SimplexBlock>,
}

impl SimplexProduct {
    pub fn new(dim: usize, blocks: Vec<SimplexBlock>) -> Result<Self> {
        let mut next = 0;
        for (b, block) in blocks.iter().enumerate() {
            if block.start != next || block.len == 0 {
                return Err(Error::BadParameters(format!(
                    "simplex block {b} does not continue the partition at coordinate {next}"
                )));
            }
            if !(block.mass > 0.0) || !block.mass.is_finite() {
                return Err(Error::BadParameters(format!(
                    "simplex block {b} has non-positive mass {}",
                    block.mass
                )));
            }
            next += block.len;
        }
        if next > dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: next,
            });
        }
        Ok(Self { dim, blocks })
    }

    /// Product of simplices with the given sizes and masses, covering all coordinates.
    pub fn from_sizes(sizes_and_masses: &[(usize, f64)]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(sizes_and_masses.len());
        let mut start = 0;
        for &(len, mass) in sizes_and_masses {
            blocks.push(SimplexBlock { start, len, mass });
            start += len;
        }
        Self::new(start, blocks)
    }

    pub fn blocks(&self) -> &[SimplexBlock] {
        &self.blocks
    }

    /// Equal split of each block's mass; free coordinates are zero.
    pub fn barycenter(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim);
        for block in &self.blocks {
            let share = block.mass / block.len as f64;
            for i in block.range() {
                x[i] = share;
            }
        }
        x
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = z.clone();
        for block in &self.blocks {
            let r = block.range();
            let projected = project_onto_simplex(&z.as_slice()[r.clone()], block.mass);
            out.as_mut_slice()[r].copy_from_slice(&projected);
        }
        out
    }

    fn violation(&self, z: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for block in &self.blocks {
            let slice = &z.as_slice()[block.range()];
            let sum: f64 = slice.iter().sum();
            worst = worst.max((sum - block.mass).abs());
            for &v in slice {
                worst = worst.max(-v);
            }
        }
        worst
    }
}

/// Sort-and-threshold projection onto `{h >= 0, sum(h) = mass}`.
pub fn project_onto_simplex(z: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - mass) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    z.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// Halfspace `<normal, x> <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: DVector<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        let excess = self.normal.dot(z) - self.offset;
        if excess <= 0.0 {
            return z.clone();
        }
        let nn = self.normal.norm_squared();
        z - &self.normal * (excess / nn)
    }

    fn violation(&self, z: &DVector<f64>) -> f64 {
        ((self.normal.dot(z) - self.offset) / self.normal.norm()).max(0.0)
    }
}

/// Intersection of finitely many halfspaces with an optional box, certified
/// nonempty by a stored feasible witness.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSet {
    dim: usize,
    rows: Vec<Halfspace>,
    bounds: Option<BoxSet>,
    witness: DVector<f64>,
    proj_tol: f64,
    max_proj_iters: usize,
}

impl HalfspaceSet {
    pub fn new(rows: Vec<Halfspace>, bounds: Option<BoxSet>, witness: DVector<f64>) -> Result<Self> {
        let dim = witness.len();
        for row in &rows {
            if row.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.normal.len(),
                });
            }
            if row.normal.norm_squared() == 0.0 {
                return Err(Error::BadParameters("halfspace with zero normal".into()));
            }
        }
        let set = Self {
            dim,
            rows,
            bounds,
            witness,
            proj_tol: DEFAULT_PROJ_TOL,
            max_proj_iters: DEFAULT_MAX_PROJ_ITERS,
        };
        let violation = set.violation(&set.witness);
        if violation > 0.0 {
            return Err(Error::Validation(format!(
                "feasible witness violates the constraints by {violation:.3e}"
            )));
        }
        Ok(set)
    }

    pub fn with_tolerances(mut self, proj_tol: f64, max_proj_iters: usize) -> Self {
        self.proj_tol = proj_tol;
        self.max_proj_iters = max_proj_iters;
        self
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn bounds(&self) -> Option<&BoxSet> {
        self.bounds.as_ref()
    }

    pub fn witness(&self) -> &DVector<f64> {
        &self.witness
    }

    fn violation(&self, z: &DVector<f64>) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(z)).fold(0.0, f64::max);
        let bounds = self.bounds.as_ref().map_or(0.0, |b| b.violation(z));
        rows.max(bounds)
    }

    fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if self.violation(z) == 0.0 {
            return Ok(z.clone());
        }
        let ops: Vec<Box<dyn Fn(&DVector<f64>) -> DVector<f64> + '_>> = self
            .rows
            .iter()
            .map(|row| Box::new(move |v: &DVector<f64>| row.project(v)) as Box<dyn Fn(&_) -> _>)
            .chain(
                self.bounds
                    .iter()
                    .map(|b| Box::new(move |v: &DVector<f64>| b.project(v)) as Box<dyn Fn(&_) -> _>),
            )
            .collect();
        dykstra(
            z,
            &ops,
            |v| self.violation(v),
            self.proj_tol,
            self.max_proj_iters,
        )
    }
}

/// Dykstra's alternating projections onto an intersection of convex sets.
fn dykstra(
    z: &DVector<f64>,
    ops: &[Box<dyn Fn(&DVector<f64>) -> DVector<f64> + '_>],
    violation: impl Fn(&DVector<f64>) -> f64,
    tol: f64,
    max_iters: usize,
) -> Result<DVector<f64>> {
    let mut x = z.clone();
    let mut increments = vec![DVector::zeros(z.len()); ops.len()];
    for _ in 0..max_iters {
        let start = x.clone();
        for (op, inc) in ops.iter().zip(increments.iter_mut()) {
            let shifted = &x + &*inc;
            let y = op(&shifted);
            *inc = shifted - &y;
            x = y;
        }
        let moved = (&x - &start).norm();
        if moved <= 0.1 * tol && violation(&x) <= tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        what: "dykstra projection",
        iterations: max_iters,
    })
}

/// Closed convex feasible set of a variational inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box(BoxSet),
    SimplexProduct(SimplexProduct),
    Halfspaces(HalfspaceSet),
    FullSpace { dim: usize },
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box(b) => b.lower.len(),
            FeasibleSet::SimplexProduct(s) => s.dim,
            FeasibleSet::Halfspaces(h) => h.dim,
            FeasibleSet::FullSpace { dim } => *dim,
        }
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Ok(FeasibleSet::Box(BoxSet::new(
            DVector::from_element(1, lower),
            DVector::from_element(1, upper),
        )?))
    }

    /// Euclidean projection of `z` onto the set.
    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        match self {
            FeasibleSet::Box(b) => Ok(b.project(z)),
            FeasibleSet::SimplexProduct(s) => Ok(s.project(z)),
            FeasibleSet::Halfspaces(h) => h.project(z),
            FeasibleSet::FullSpace { .. } => Ok(z.clone()),
        }
    }

    /// Largest constraint violation at `z` (zero when feasible).
    pub fn violation(&self, z: &DVector<f64>) -> f64 {
        match self {
            FeasibleSet::Box(b) => b.violation(z),
            FeasibleSet::SimplexProduct(s) => s.violation(z),
            FeasibleSet::Halfspaces(h) => h.violation(z),
            FeasibleSet::FullSpace { .. } => 0.0,
        }
    }

    /// True iff every defining constraint is violated by at most `tol`.
    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        z.len() == self.dim() && z.iter().all(|v| v.is_finite()) && self.violation(z) <= tol
    }

    /// Tolerance to which projections (and hence iterates) are feasible.
    pub fn proj_tol(&self) -> f64 {
        match self {
            FeasibleSet::Halfspaces(h) => h.proj_tol,
            _ => DEFAULT_PROJ_TOL,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            FeasibleSet::Box(b) => b.lower.iter().chain(b.upper.iter()).all(|v| v.is_finite()),
            FeasibleSet::SimplexProduct(s) => s.blocks.iter().map(|b| b.len).sum::<usize>() == s.dim,
            FeasibleSet::Halfspaces(h) => h
                .bounds
                .as_ref()
                .is_some_and(|b| b.lower.iter().chain(b.upper.iter()).all(|v| v.is_finite())),
            FeasibleSet::FullSpace { .. } => false,
        }
    }

    /// A feasible reference point: simplex barycenter, halfspace witness,
    /// box center (clamped toward finite sides), or the origin.
    pub fn reference_point(&self) -> DVector<f64> {
        match self {
            FeasibleSet::Box(b) => DVector::from_iterator(
                b.lower.len(),
                b.lower.iter().zip(b.upper.iter()).map(|(&l, &u)| {
                    match (l.is_finite(), u.is_finite()) {
                        (true, true) => 0.5 * (l + u),
                        (true, false) => l.max(0.0),
                        (false, true) => u.min(0.0),
                        (false, false) => 0.0,
                    }
                }),
            ),
            FeasibleSet::SimplexProduct(s) => s.barycenter(),
            FeasibleSet::Halfspaces(h) => h.witness.clone(),
            FeasibleSet::FullSpace { dim } => DVector::zeros(*dim),
        }
    }

    /// Signature of the face of the set containing `y`; used to detect
    /// active-set changes of projections.
    pub fn face_signature(&self, y: &DVector<f64>, tol: f64) -> Vec<i8> {
        match self {
            FeasibleSet::Box(b) => y
                .iter()
                .zip(b.lower.iter().zip(b.upper.iter()))
                .map(|(&v, (&l, &u))| {
                    if v - l <= tol {
                        -1
                    } else if u - v <= tol {
                        1
                    } else {
                        0
                    }
                })
                .collect(),
            FeasibleSet::SimplexProduct(s) => s
                .blocks
                .iter()
                .flat_map(|b| b.range())
                .map(|i| i8::from(y[i] <= tol))
                .collect(),
            FeasibleSet::Halfspaces(h) => {
                let mut sig: Vec<i8> = h
                    .rows
                    .iter()
                    .map(|r| i8::from(r.normal.dot(y) - r.offset >= -tol))
                    .collect();
                if let Some(b) = &h.bounds {
                    sig.extend(FeasibleSet::Box(b.clone()).face_signature(y, tol));
                }
                sig
            }
            FeasibleSet::FullSpace { .. } => Vec::new(),
        }
    }

    /// Projection of `w` onto the tangent cone of the set at the feasible
    /// point `x`. With `w = -grad`, its norm is the distance from zero to
    /// `grad + N(x)`, the subdifferential of `f + indicator` at `x`.
    pub fn project_tangent_cone(&self, x: &DVector<f64>, w: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        self.check_dim(w)?;
        match self {
            FeasibleSet::Box(b) => Ok(box_tangent_projection(b, x, w, tol)),
            FeasibleSet::SimplexProduct(s) => {
                let mut v = w.clone();
                for block in &s.blocks {
                    let r = block.range();
                    let xs = &x.as_slice()[r.clone()];
                    let ws = &w.as_slice()[r.clone()];
                    let vs = simplex_tangent_projection(xs, ws, tol);
                    v.as_mut_slice()[r].copy_from_slice(&vs);
                }
                Ok(v)
            }
            FeasibleSet::Halfspaces(h) => {
                let active: Vec<Halfspace> = h
                    .rows
                    .iter()
                    .filter(|r| r.normal.dot(x) - r.offset >= -tol * r.normal.norm())
                    .map(|r| Halfspace::new(r.normal.clone(), 0.0))
                    .collect();
                let bounds = h.bounds.clone();
                let mut ops: Vec<Box<dyn Fn(&DVector<f64>) -> DVector<f64> + '_>> = active
                    .iter()
                    .map(|r| Box::new(move |v: &DVector<f64>| r.project(v)) as Box<dyn Fn(&_) -> _>)
                    .collect();
                if let Some(b) = &bounds {
                    ops.push(Box::new(move |v: &DVector<f64>| box_tangent_projection(b, x, v, tol)));
                }
                if ops.is_empty() {
                    return Ok(w.clone());
                }
                let violation = |v: &DVector<f64>| {
                    let rows = active.iter().map(|r| r.violation(v)).fold(0.0, f64::max);
                    let boxed = bounds
                        .as_ref()
                        .map_or(0.0, |b| (box_tangent_projection(b, x, v, tol) - v).amax());
                    rows.max(boxed)
                };
                dykstra(w, &ops, violation, h.proj_tol, h.max_proj_iters)
            }
            FeasibleSet::FullSpace { .. } => Ok(w.clone()),
        }
    }

    fn check_dim(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }
}

fn box_tangent_projection(b: &BoxSet, x: &DVector<f64>, w: &DVector<f64>, tol: f64) -> DVector<f64> {
    DVector::from_iterator(
        w.len(),
        w.iter().enumerate().map(|(i, &wi)| {
            let at_lower = b.lower[i].is_finite() && x[i] - b.lower[i] <= tol;
            let at_upper = b.upper[i].is_finite() && b.upper[i] - x[i] <= tol;
            match (at_lower, at_upper) {
                (true, true) => 0.0,
                (true, false) => wi.max(0.0),
                (false, true) => wi.min(0.0),
                (false, false) => wi,
            }
        }),
    )
}

/// Projection of `w` onto `{v : sum(v) = 0, v_i >= 0 where x_i = 0}`.
fn simplex_tangent_projection(x: &[f64], w: &[f64], tol: f64) -> Vec<f64> {
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    let mut clamped: Vec<f64> = Vec::new();
    for (&xi, &wi) in x.iter().zip(w) {
        if xi <= tol {
            clamped.push(wi);
        } else {
            free_sum += wi;
            n_free += 1;
        }
    }
    clamped.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    // v_i = w_i - tau on free coordinates, max(w_i - tau, 0) on clamped ones,
    // with tau chosen so that the entries sum to zero.
    let mut tau = if n_free > 0 { free_sum / n_free as f64 } else { f64::INFINITY };
    let (mut sum, mut count) = (free_sum, n_free);
    for &c in &clamped {
        if c <= tau {
            break;
        }
        sum += c;
        count += 1;
        tau = sum / count as f64;
    }
    if !tau.is_finite() {
        // every coordinate sits at zero, which cannot happen for positive mass
        return vec![0.0; w.len()];
    }
    x.iter()
        .zip(w)
        .map(|(&xi, &wi)| if xi <= tol { (wi - tau).max(0.0) } else { wi - tau })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn example_halfspaces() -> FeasibleSet {
        // {y >= 1, x + y <= 10}
        FeasibleSet::Halfspaces(
            HalfspaceSet::new(
                vec![
                    Halfspace::new(v(&[0.0, -1.0]), -1.0),
                    Halfspace::new(v(&[1.0, 1.0]), 10.0),
                ],
                None,
                v(&[0.0, 5.0]),
            )
            .unwrap(),
        )
    }

    #[test]
    fn box_clamps() {
        let set = FeasibleSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(set.project(&v(&[2.0])).unwrap()[0], 1.0);
        assert!(set.contains(&v(&[0.99]), 0.0));
        assert!(!set.contains(&v(&[1.5]), 0.1));
    }

    #[test]
    fn box_with_infinite_sides() {
        let set = FeasibleSet::Box(
            BoxSet::new(v(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), v(&[f64::INFINITY, 0.0])).unwrap(),
        );
        let p = set.project(&v(&[-1e300, 3.0])).unwrap();
        assert_eq!(p, v(&[-1e300, 0.0]));
    }

    #[test]
    fn box_rejects_crossed_bounds() {
        assert!(BoxSet::new(v(&[1.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn simplex_examples() {
        let set = FeasibleSet::SimplexProduct(SimplexProduct::from_sizes(&[(2, 1.0)]).unwrap());
        let p = set.project(&v(&[0.6, 0.6])).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);

        let set3 = FeasibleSet::SimplexProduct(SimplexProduct::from_sizes(&[(3, 1.0)]).unwrap());
        assert_eq!(set3.project(&v(&[2.0, 0.0, 0.0])).unwrap(), v(&[1.0, 0.0, 0.0]));

        assert!(!set.contains(&v(&[0.5, 0.6]), 1e-9));
    }

    #[test]
    fn simplex_rejects_bad_blocks() {
        assert!(SimplexProduct::from_sizes(&[(2, 0.0)]).is_err());
        assert!(SimplexProduct::new(
            3,
            vec![SimplexBlock { start: 1, len: 2, mass: 1.0 }]
        )
        .is_err());
    }

    #[test]
    fn scaled_simplex_keeps_mass() {
        let set = FeasibleSet::SimplexProduct(SimplexProduct::from_sizes(&[(3, 800.0), (2, 200.0)]).unwrap());
        let p = set.project(&v(&[1000.0, -5.0, 30.0, 400.0, 400.0])).unwrap();
        assert_abs_diff_eq!(p.rows(0, 3).sum(), 800.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.rows(3, 2).sum(), 200.0, epsilon = 1e-10);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn halfspace_examples() {
        let set = example_halfspaces();
        let p = set.project(&v(&[0.0, 0.5])).unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-10);
        assert!(set.contains(&v(&[9.0, 1.0]), 0.0));
        // corner projection needs both constraints
        let c = set.project(&v(&[20.0, -5.0])).unwrap();
        assert_abs_diff_eq!(c[0], 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn halfspace_witness_must_be_feasible() {
        let bad = HalfspaceSet::new(vec![Halfspace::new(v(&[1.0]), 0.0)], None, v(&[1.0]));
        assert!(matches!(bad, Err(Error::Validation(_))));
    }

    #[test]
    fn dykstra_reports_nonconvergence() {
        let set = HalfspaceSet::new(
            vec![
                Halfspace::new(v(&[1.0, 1.0]), 1.0),
                Halfspace::new(v(&[1.0, 1.000001]), 1.0),
                Halfspace::new(v(&[-1.0, 0.0]), 0.0),
            ],
            None,
            v(&[0.0, 0.0]),
        )
        .unwrap()
        .with_tolerances(1e-14, 2);
        let err = FeasibleSet::Halfspaces(set).project(&v(&[5.0, 5.0]));
        assert!(matches!(err, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn tangent_cone_of_simplex_vertex() {
        let set = FeasibleSet::SimplexProduct(SimplexProduct::from_sizes(&[(3, 1.0)]).unwrap());
        let x = v(&[1.0, 0.0, 0.0]);
        // pushing mass into coordinate 0 is infeasible, the cone projection is zero
        let t = set.project_tangent_cone(&x, &v(&[1.0, -0.5, -0.5]), 1e-12).unwrap();
        assert_abs_diff_eq!(t.norm(), 0.0, epsilon = 1e-15);
        let t = set.project_tangent_cone(&x, &v(&[-1.0, 1.0, 0.0]), 1e-12).unwrap();
        assert_abs_diff_eq!(t[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t[2], 0.0, epsilon = 1e-15);
    }
}
