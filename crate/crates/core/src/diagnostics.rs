//! Empirical checks on concrete instances: Lipschitz and error-bound
//! constants, Minty and monotonicity probes, and a batch of runtime checks
//! of the descent inequalities behind the proximal gradient analysis.
//!
//! Every estimate here is a sampled lower bound on the true quantity (or a
//! sampled witness); nothing is claimed to hold globally.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::GapEvaluator;
use crate::problem::{Mapping, SolutionSet, VIProblem};
use crate::prox::{e_alpha, g_alpha, prox_point};
use crate::set::FeasibleSet;

/// Inflation applied to sampled Lipschitz ratios.
pub const LIPSCHITZ_SAFETY: f64 = 1.2;
const LOCAL_STEPS: usize = 4;
const LOCAL_STEP: f64 = 1e-4;
const LOCAL_STEP_SEED: u64 = 0x9e37_79b9;
const STEP_REFINE_ROUNDS: usize = 8;
const STEP_PIECES: usize = 4;
/// Default tolerance for calling a sampled inner product a violation.
pub const TOL_VIOL: f64 = 1e-9;
const MAX_WITNESSES: usize = 3;
const LIPSCHITZ_SAMPLES: usize = 256;
const ACTIVE_TOL: f64 = 1e-9;

/// Where sample points come from: the feasible set itself, or a box
/// intersected with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRegion {
    pub bounds: Option<(DVector<f64>, DVector<f64>)>,
    pub n_samples: usize,
    pub seed: u64,
}

impl SampleRegion {
    pub fn feasible_set(n_samples: usize, seed: u64) -> Self {
        Self {
            bounds: None,
            n_samples,
            seed,
        }
    }

    pub fn boxed(lower: DVector<f64>, upper: DVector<f64>, n_samples: usize, seed: u64) -> Self {
        Self {
            bounds: Some((lower, upper)),
            n_samples,
            seed,
        }
    }

    /// The instance's sampling box when it has one, else the feasible set.
    pub fn for_problem(problem: &VIProblem, n_samples: usize, seed: u64) -> Self {
        Self {
            bounds: problem.meta().sample_box.clone(),
            n_samples,
            seed,
        }
    }

    /// `n_samples` feasible points, deterministic in the seed.
    pub fn sample(&self, set: &FeasibleSet) -> Result<Vec<DVector<f64>>> {
        self.sample_n(set, self.n_samples)
    }

    pub fn sample_n(&self, set: &FeasibleSet, n: usize) -> Result<Vec<DVector<f64>>> {
        if n == 0 {
            return Err(Error::DegenerateRegion("no samples requested".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dim = set.dim();
        match (&self.bounds, set) {
            (None, FeasibleSet::SimplexProduct(s)) if set.is_bounded() => Ok((0..n)
                .map(|_| {
                    let mut x = DVector::zeros(dim);
                    for block in s.blocks() {
                        let draws: Vec<f64> = block.range().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                        let total: f64 = draws.iter().sum();
                        for (i, e) in block.range().zip(draws) {
                            x[i] = block.mass * e / total;
                        }
                    }
                    x
                })
                .collect()),
            (None, FeasibleSet::Box(b)) if set.is_bounded() => Ok((0..n)
                .map(|_| DVector::from_fn(dim, |i, _| rng.gen_range(b.lower()[i]..=b.upper()[i])))
                .collect()),
            (None, FeasibleSet::Halfspaces(h)) if set.is_bounded() => {
                let b = h.bounds().expect("bounded halfspace sets carry a box");
                rejection(&mut rng, set, b.lower(), b.upper(), n)
            }
            (None, _) => Err(Error::DegenerateRegion(
                "an unbounded feasible set needs a sampling box".into(),
            )),
            (Some((lower, upper)), _) => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: lower.len(),
                    });
                }
                if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
                    return Err(Error::DegenerateRegion("sampling box must be finite and ordered".into()));
                }
                rejection(&mut rng, set, lower, upper, n)
            }
        }
    }
}

/// Uniform draws from the box kept when feasible; after a budget of misses
/// the remaining draws are projected onto the set.
fn rejection(
    rng: &mut ChaCha8Rng,
    set: &FeasibleSet,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    n: usize,
) -> Result<Vec<DVector<f64>>> {
    let dim = set.dim();
    let mut out = Vec::with_capacity(n);
    let mut misses = 0usize;
    while out.len() < n {
        let z = DVector::from_fn(dim, |i, _| rng.gen_range(lower[i]..=upper[i]));
        if set.contains(&z, 0.0) {
            out.push(z);
        } else if misses < 100 * n {
            misses += 1;
        } else {
            out.push(set.project(&z)?);
        }
    }
    Ok(out)
}

/// `dist(0, grad g(x) + N_X(x))`, the norm of the smallest element of the
/// subdifferential of `g + indicator_X` at the feasible point `x`.
pub fn subdifferential_distance(ev: &GapEvaluator<'_>, x: &DVector<f64>) -> Result<f64> {
    let gradient = ev.gap_gradient(x)?;
    let cone = ev.problem().feasible_set().project_tangent_cone(x, &(-gradient), ACTIVE_TOL)?;
    Ok(cone.norm())
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

fn nullspace_projector(rows: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    if rows.is_empty() {
        return DMatrix::identity(dim, dim);
    }
    let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let scale = svd.singular_values.max();
    let mut p = DMatrix::identity(dim, dim);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * scale.max(1.0) {
            let v = vt.row(k).transpose();
            p -= &v * v.transpose();
        }
    }
    p
}

/// Projector onto the direction space of the face of `set` containing `y`.
fn face_projector(set: &FeasibleSet, y: &DVector<f64>) -> DMatrix<f64> {
    let dim = set.dim();
    match set {
        FeasibleSet::Box(b) => DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
            let at_lower = b.lower()[i].is_finite() && y[i] - b.lower()[i] <= ACTIVE_TOL;
            let at_upper = b.upper()[i].is_finite() && b.upper()[i] - y[i] <= ACTIVE_TOL;
            if at_lower || at_upper {
                0.0
            } else {
                1.0
            }
        })),
        FeasibleSet::SimplexProduct(s) => {
            let mut p = DMatrix::identity(dim, dim);
            for block in s.blocks() {
                let free: Vec<usize> = block.range().filter(|&i| y[i] > ACTIVE_TOL * block.mass.max(1.0)).collect();
                for i in block.range() {
                    for j in block.range() {
                        p[(i, j)] = 0.0;
                    }
                }
                let share = 1.0 / free.len().max(1) as f64;
                for &i in &free {
                    for &j in &free {
                        p[(i, j)] = if i == j { 1.0 - share } else { -share };
                    }
                }
            }
            p
        }
        FeasibleSet::Halfspaces(h) => {
            let mut active: Vec<DVector<f64>> = h
                .rows()
                .iter()
                .filter(|r| r.normal.dot(y) - r.offset >= -ACTIVE_TOL * r.normal.norm())
                .map(|r| r.normal.clone())
                .collect();
            if let Some(b) = h.bounds() {
                for i in 0..dim {
                    let at_lower = b.lower()[i].is_finite() && y[i] - b.lower()[i] <= ACTIVE_TOL;
                    let at_upper = b.upper()[i].is_finite() && b.upper()[i] - y[i] <= ACTIVE_TOL;
                    if at_lower || at_upper {
                        let mut e = DVector::zeros(dim);
                        e[i] = 1.0;
                        active.push(e);
                    }
                }
            }
            nullspace_projector(&active, dim)
        }
        FeasibleSet::FullSpace { .. } => DMatrix::identity(dim, dim),
    }
}

/// Projector onto the directions of the affine hull of `set`.
fn hull_projector(set: &FeasibleSet) -> DMatrix<f64> {
    match set {
        FeasibleSet::SimplexProduct(s) => face_projector(set, &s.barycenter()),
        _ => DMatrix::identity(set.dim(), set.dim()),
    }
}

/// Lipschitz constant of `grad g_lambda` for affine `F(x) = M x + q`, over
/// the pieces of the feasible set visited by `points`.
///
/// On the piece where `y_lambda(x)` lies on a face with direction projector
/// `P`, the gradient is affine with Jacobian `K + B P C`, where
/// `K = M + M^T - I/lambda`, `B = I/lambda - M^T` and `C = I - lambda M`.
/// The gradient is continuous and piecewise affine, so its Lipschitz
/// constant on `X` is the largest norm of these Jacobians restricted to the
/// directions of `X`, taken over the full-dimensional pieces; sampled points
/// land in those with probability one.
pub fn affine_gap_lipschitz(problem: &VIProblem, lambda: f64, points: &[DVector<f64>]) -> Result<Option<f64>> {
    let Mapping::Affine { matrix, .. } = problem.mapping() else {
        return Ok(None);
    };
    let ev = GapEvaluator::new(problem, lambda)?;
    let set = problem.feasible_set();
    let d = matrix.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let k = matrix + matrix.transpose() - &eye / lambda;
    let b = &eye / lambda - matrix.transpose();
    let c = &eye - matrix * lambda;
    let hull = hull_projector(set);
    let mut seen: Vec<Vec<i8>> = Vec::new();
    let mut best: f64 = 0.0;
    for x in points {
        let y = ev.y_lambda(x)?;
        let signature = set.face_signature(&y, ACTIVE_TOL);
        if seen.contains(&signature) {
            continue;
        }
        seen.push(signature);
        let p = face_projector(set, &y);
        best = best.max(spectral_norm(&((&k + &b * p * &c) * &hull)));
    }
    Ok(Some(best))
}

/// Sampled Lipschitz estimate of `grad g_lambda` over all sample pairs and
/// over short random steps from each sample, inflated by
/// [`LIPSCHITZ_SAFETY`]; for affine maps the larger of this and
/// [`affine_gap_lipschitz`] over the same samples.
pub fn estimate_lipschitz(ev: &GapEvaluator<'_>, region: &SampleRegion) -> Result<f64> {
    let problem = ev.problem();
    let set = problem.feasible_set();
    let samples = region.sample(set)?;
    let gradients = samples.iter().map(|x| ev.gap_gradient(x)).collect::<Result<Vec<_>>>()?;
    let mut ratio: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dx = (&samples[i] - &samples[j]).norm();
            spread = spread.max(dx);
            if dx > 0.0 {
                ratio = ratio.max((&gradients[i] - &gradients[j]).norm() / dx);
            }
        }
    }
    if spread == 0.0 {
        return Err(Error::DegenerateRegion("all samples coincide".into()));
    }
    // Distant pairs average curvature out; short steps catch its peaks.
    let mut rng = ChaCha8Rng::seed_from_u64(region.seed ^ LOCAL_STEP_SEED);
    for (x, gx) in samples.iter().zip(&gradients) {
        for _ in 0..LOCAL_STEPS {
            let u = DVector::<f64>::from_fn(x.len(), |_, _| rng.gen_range(-1.0..=1.0));
            let h = LOCAL_STEP * (1.0 + x.norm()) / u.norm().max(f64::MIN_POSITIVE);
            let z = set.project(&(x + u * h))?;
            let dz = (&z - x).norm();
            if dz > 0.0 {
                ratio = ratio.max((ev.gap_gradient(&z)? - gx).norm() / dz);
            }
        }
    }
    let sampled = LIPSCHITZ_SAFETY * ratio;
    Ok(match affine_gap_lipschitz(problem, ev.lambda(), &samples)? {
        Some(exact) => sampled.max(exact),
        None => sampled,
    })
}

/// Step-size Lipschitz bound: the piecewise bound for affine maps, otherwise
/// the sampled estimate, both over the instance's default region.
pub fn lipschitz_bound(problem: &VIProblem, lambda: f64) -> Result<f64> {
    let region = SampleRegion::for_problem(problem, LIPSCHITZ_SAMPLES, 0);
    if problem.mapping().is_affine() {
        let mut points = match region.sample(problem.feasible_set()) {
            Ok(points) => points,
            Err(Error::DegenerateRegion(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        points.push(problem.feasible_set().reference_point());
        return Ok(affine_gap_lipschitz(problem, lambda, &points)?.unwrap_or(0.0));
    }
    let ev = GapEvaluator::new(problem, lambda)?;
    let mut bound = estimate_lipschitz(&ev, &region)?;
    // Steps from the edge of the region can reach stronger curvature; walk
    // each step in pieces and raise the bound until the step length it
    // implies is covered.
    let samples = region.sample(problem.feasible_set())?;
    for _ in 0..STEP_REFINE_ROUNDS {
        let alpha = 0.9 / bound;
        let mut ratio: f64 = 0.0;
        for x in &samples {
            let z = prox_point(&ev, alpha, x)?.next;
            let mut prev = x.clone();
            let mut prev_grad = ev.gap_gradient(x)?;
            for piece in 1..=STEP_PIECES {
                let w = problem.feasible_set().project(&(x + (&z - x) * (piece as f64 / STEP_PIECES as f64)))?;
                let grad = ev.gap_gradient(&w)?;
                let dw = (&w - &prev).norm();
                if dw > 0.0 {
                    ratio = ratio.max((&grad - &prev_grad).norm() / dw);
                }
                prev = w;
                prev_grad = grad;
            }
        }
        let refined = LIPSCHITZ_SAFETY * ratio;
        if refined <= bound {
            break;
        }
        bound = refined;
    }
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundEstimate {
    /// Largest sampled ratio.
    pub constant: f64,
    pub n_samples: usize,
    /// Samples inside the level set `{g <= nu}`.
    pub n_in_level_set: usize,
    /// Samples with a nonzero denominator.
    pub n_used: usize,
    pub worst_point: Vec<f64>,
}

fn error_bound_estimate(
    ev: &GapEvaluator<'_>,
    solutions: &SolutionSet,
    nu: f64,
    region: &SampleRegion,
    denominator: impl Fn(&DVector<f64>) -> Result<f64>,
) -> Result<ErrorBoundEstimate> {
    if !(nu > 0.0) {
        return Err(Error::BadParameters(format!("level nu must be positive, got {nu}")));
    }
    if solutions.is_empty() {
        return Err(Error::BadParameters("error-bound estimation needs solutions".into()));
    }
    let samples = region.sample(ev.problem().feasible_set())?;
    let mut estimate = ErrorBoundEstimate {
        constant: 0.0,
        n_samples: samples.len(),
        n_in_level_set: 0,
        n_used: 0,
        worst_point: Vec::new(),
    };
    for x in &samples {
        if ev.gap_value(x)? > nu {
            continue;
        }
        estimate.n_in_level_set += 1;
        let den = denominator(x)?;
        if den <= 0.0 {
            continue;
        }
        estimate.n_used += 1;
        let ratio = solutions.distance(x).unwrap_or(0.0) / den;
        if ratio > estimate.constant || estimate.worst_point.is_empty() {
            estimate.constant = ratio.max(estimate.constant);
            estimate.worst_point = x.as_slice().to_vec();
        }
    }
    if estimate.n_in_level_set == 0 {
        return Err(Error::NoSamplesInLevelSet { nu });
    }
    Ok(estimate)
}

/// Level-set proximal error bound: largest `dist(x, X*) / |x - T_alpha(x)|`
/// over samples with `g(x) <= nu`.
pub fn estimate_peb_constant(
    ev: &GapEvaluator<'_>,
    alpha: f64,
    solutions: &SolutionSet,
    nu: f64,
    region: &SampleRegion,
) -> Result<ErrorBoundEstimate> {
    error_bound_estimate(ev, solutions, nu, region, |x| Ok(prox_point(ev, alpha, x)?.step_norm))
}

/// Level-set subdifferential error bound: largest
/// `dist(x, X*) / dist(0, subdifferential at x)` over samples with `g(x) <= nu`.
pub fn estimate_seb_constant(
    ev: &GapEvaluator<'_>,
    solutions: &SolutionSet,
    nu: f64,
    region: &SampleRegion,
) -> Result<ErrorBoundEstimate> {
    error_bound_estimate(ev, solutions, nu, region, |x| subdifferential_distance(ev, x))
}

/// `<F(x), x - x_star>`; negative values refute `x_star` as a Minty solution.
pub fn minty_value(problem: &VIProblem, x: &DVector<f64>, x_star: &DVector<f64>) -> f64 {
    problem.eval_f(x).dot(&(x - x_star))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MintyRefutation {
    pub candidate: Vec<f64>,
    pub point: Vec<f64>,
    pub value: f64,
}

/// One refuting point per candidate, each the most negative found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MintyWitness {
    pub refutations: Vec<MintyRefutation>,
}

/// Searches sampled feasible points for `<F(x), x - x*> < -tol` against each
/// candidate. Returns a witness only when every candidate is refuted, which
/// certifies that none of them is a Minty solution.
pub fn minty_violation_search(
    problem: &VIProblem,
    candidates: &[DVector<f64>],
    region: &SampleRegion,
    tol: f64,
) -> Result<Option<MintyWitness>> {
    if candidates.is_empty() {
        return Err(Error::BadParameters("Minty search needs at least one candidate".into()));
    }
    let samples = region.sample(problem.feasible_set())?;
    let values: Vec<DVector<f64>> = samples.iter().map(|x| problem.eval_f(x)).collect();
    let mut refutations = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let worst = samples
            .iter()
            .zip(&values)
            .map(|(x, f)| (x, f.dot(&(x - candidate))))
            .fold(None::<(&DVector<f64>, f64)>, |best, (x, v)| match best {
                Some((_, bv)) if bv <= v => best,
                _ => Some((x, v)),
            });
        match worst {
            Some((x, value)) if value < -tol => refutations.push(MintyRefutation {
                candidate: candidate.as_slice().to_vec(),
                point: x.as_slice().to_vec(),
                value,
            }),
            _ => return Ok(None),
        }
    }
    Ok(Some(MintyWitness { refutations }))
}

/// `<F(x) - F(x'), x - x'>`.
pub fn monotonicity_pair_value(problem: &VIProblem, x: &DVector<f64>, x_prime: &DVector<f64>) -> f64 {
    (problem.eval_f(x) - problem.eval_f(x_prime)).dot(&(x - x_prime))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Smallest `<F(x) - F(x'), x - x'> / |x - x'|^2` over sampled pairs.
    pub min_ratio: f64,
    pub witness: (Vec<f64>, Vec<f64>),
    pub n_pairs: usize,
}

impl MonotonicityReport {
    /// A negative minimum certifies non-monotonicity.
    pub fn certifies_non_monotone(&self) -> bool {
        self.min_ratio < 0.0
    }
}

/// Samples all pairs of region points.
pub fn monotonicity_probe(problem: &VIProblem, region: &SampleRegion) -> Result<MonotonicityReport> {
    let samples = region.sample(problem.feasible_set())?;
    let values: Vec<DVector<f64>> = samples.iter().map(|x| problem.eval_f(x)).collect();
    let mut report: Option<MonotonicityReport> = None;
    let mut n_pairs = 0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dx = &samples[i] - &samples[j];
            let dd = dx.norm_squared();
            if dd == 0.0 {
                continue;
            }
            n_pairs += 1;
            let ratio = (&values[i] - &values[j]).dot(&dx) / dd;
            if report.as_ref().is_none_or(|r| ratio < r.min_ratio) {
                report = Some(MonotonicityReport {
                    min_ratio: ratio,
                    witness: (samples[i].as_slice().to_vec(), samples[j].as_slice().to_vec()),
                    n_pairs: 0,
                });
            }
        }
    }
    let mut report = report.ok_or_else(|| Error::DegenerateRegion("all samples coincide".into()))?;
    report.n_pairs = n_pairs;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedMonotonicityReport {
    /// Smallest `<F(x) - F(P x), x - P x> / |x - P x|^2`, with `P` the
    /// projection onto the solution representation.
    pub min_ratio: f64,
    pub witness: Vec<f64>,
    pub n_used: usize,
}

pub fn restricted_strong_monotonicity_probe(
    problem: &VIProblem,
    solutions: &SolutionSet,
    region: &SampleRegion,
) -> Result<RestrictedMonotonicityReport> {
    let samples = region.sample(problem.feasible_set())?;
    let mut report: Option<RestrictedMonotonicityReport> = None;
    let mut n_used = 0;
    for x in &samples {
        let p = solutions
            .project(x)
            .ok_or_else(|| Error::BadParameters("restricted monotonicity needs solutions".into()))?;
        let d = x - &p;
        let dd = d.norm_squared();
        if dd <= 1e-18 {
            continue;
        }
        n_used += 1;
        let ratio = (problem.eval_f(x) - problem.eval_f(&p)).dot(&d) / dd;
        if report.as_ref().is_none_or(|r| ratio < r.min_ratio) {
            report = Some(RestrictedMonotonicityReport {
                min_ratio: ratio,
                witness: x.as_slice().to_vec(),
                n_used: 0,
            });
        }
    }
    let mut report = report.ok_or_else(|| Error::DegenerateRegion("all samples lie in the solution set".into()))?;
    report.n_used = n_used;
    Ok(report)
}

/// Names of the runtime checks in a [`PropertyReport`].
pub mod property {
    pub const ENVELOPE_IDENTITY: &str = "envelope_identity";
    pub const SUFFICIENT_DECREASE: &str = "sufficient_decrease";
    pub const DESCENT: &str = "descent";
    pub const PROX_GAP_LOWER: &str = "prox_gap_lower_bound";
    pub const PROX_GAP_UPPER: &str = "prox_gap_upper_bound";
    pub const STEP_BOUND: &str = "step_bound";
    pub const SUBDIFF_AT_STEP: &str = "subdifferential_at_step";
    pub const DESCENT_LEMMA: &str = "generalized_descent";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    /// Second point of a pair check.
    pub other: Option<Vec<f64>>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub n_checked: usize,
    pub n_violations: usize,
    /// Smallest `rhs - lhs` seen; negative beyond tolerance is a violation.
    pub worst_slack: f64,
    pub witnesses: Vec<Witness>,
}

impl PropertyCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            n_checked: 0,
            n_violations: 0,
            worst_slack: f64::INFINITY,
            witnesses: Vec::new(),
        }
    }

    /// Records `lhs <= rhs` with tolerance `slack * (1 + max(|lhs|, |rhs|))`.
    fn record(&mut self, lhs: f64, rhs: f64, slack: f64, point: &DVector<f64>, other: Option<&DVector<f64>>) {
        self.push(rhs - lhs, slack * (1.0 + lhs.abs().max(rhs.abs())), point, other);
    }

    /// Records `a = b` with the same tolerance.
    fn record_identity(&mut self, a: f64, b: f64, slack: f64, point: &DVector<f64>) {
        self.push(-(a - b).abs(), slack * (1.0 + a.abs().max(b.abs())), point, None);
    }

    fn push(&mut self, margin: f64, tol: f64, point: &DVector<f64>, other: Option<&DVector<f64>>) {
        self.n_checked += 1;
        self.worst_slack = self.worst_slack.min(margin);
        if margin < -tol || margin.is_nan() {
            self.n_violations += 1;
            self.witnesses.push(Witness {
                point: point.as_slice().to_vec(),
                other: other.map(|o| o.as_slice().to_vec()),
                slack: margin,
            });
            self.witnesses.sort_by(|a, b| a.slack.total_cmp(&b.slack));
            self.witnesses.truncate(MAX_WITNESSES);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub lambda: f64,
    pub alpha: f64,
    /// Lipschitz bound used in the inequalities; estimated when absent.
    pub lipschitz: Option<f64>,
    pub rho: f64,
    /// Relative tolerance per check.
    pub slack: f64,
}

impl SuiteConfig {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            lipschitz: None,
            rho: 0.0,
            slack: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub problem: String,
    pub lambda: f64,
    pub alpha: f64,
    pub lipschitz: f64,
    pub rho: f64,
    pub slack: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violations(&self, name: &str) -> usize {
        self.check(name).map_or(0, |c| c.n_violations)
    }

    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.n_violations).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}

/// Checks the proximal-gradient inequalities for `phi = g_lambda + indicator_X`
/// at sampled points (and pairs, for the generalized descent inequality).
///
/// Per point `x`, with `T = T_alpha(x)`, `s = |x - T|` and
/// `D(x) = dist(0, subdifferential of phi at x)`:
///
/// ```text
/// envelope_identity        E(x) = phi(x) - alpha G(x)
/// sufficient_decrease      phi(T) <= phi(x) - (2/alpha - L - rho) s^2 / 2
/// descent                  phi(T) <= phi(x)
/// prox_gap_lower_bound     (1 - alpha rho) s^2 / (2 alpha^2) <= G(x)
/// prox_gap_upper_bound     G(x) <= D(x)^2 / (2 (1 - alpha rho))
/// step_bound               s <= alpha D(x) / (1 - alpha rho)
/// subdifferential_at_step  D(T) <= (L + 1/alpha) s
/// ```
///
/// and per pair `(x, u)`:
///
/// ```text
/// generalized_descent      phi(T) - phi(u) <= ((1/alpha + L) |x-u|^2
///                              - (1/alpha - L) s^2 - (1/alpha - rho) |u-T|^2) / 2
/// ```
pub fn run_property_suite(problem: &VIProblem, config: &SuiteConfig, region: &SampleRegion) -> Result<PropertyReport> {
    let ev = GapEvaluator::new(problem, config.lambda)?;
    let alpha = config.alpha;
    if !(alpha > 0.0) || config.rho < 0.0 || alpha * config.rho >= 1.0 {
        return Err(Error::BadParameters(format!(
            "property suite needs alpha > 0 and alpha * rho < 1, got alpha = {alpha}, rho = {}",
            config.rho
        )));
    }
    let lipschitz = match config.lipschitz {
        Some(l) => l,
        None => estimate_lipschitz(&ev, region)?,
    };
    let (l, rho, slack) = (lipschitz, config.rho, config.slack);
    let set = problem.feasible_set();
    let points = region.sample_n(set, 2 * region.n_samples)?;
    let (xs, us) = points.split_at(region.n_samples);

    let mut envelope = PropertyCheck::new(property::ENVELOPE_IDENTITY);
    let mut decrease = PropertyCheck::new(property::SUFFICIENT_DECREASE);
    let mut descent = PropertyCheck::new(property::DESCENT);
    let mut lower = PropertyCheck::new(property::PROX_GAP_LOWER);
    let mut upper = PropertyCheck::new(property::PROX_GAP_UPPER);
    let mut step = PropertyCheck::new(property::STEP_BOUND);
    let mut at_step = PropertyCheck::new(property::SUBDIFF_AT_STEP);
    let mut lemma = PropertyCheck::new(property::DESCENT_LEMMA);

    for (x, u) in xs.iter().zip(us) {
        let pp = prox_point(&ev, alpha, x)?;
        let phi_x = pp.value;
        let t = &pp.next;
        let s = pp.step_norm;
        let phi_t = ev.gap_value(t)?;
        let g = g_alpha(&ev, alpha, x)?;
        let e = e_alpha(&ev, alpha, x)?;
        let d_x = subdifferential_distance(&ev, x)?;
        let d_t = subdifferential_distance(&ev, t)?;

        envelope.record_identity(e, phi_x - alpha * g, slack, x);
        decrease.record(phi_t, phi_x - 0.5 * (2.0 / alpha - l - rho) * s * s, slack, x, None);
        descent.record(phi_t, phi_x, slack, x, None);
        lower.record((1.0 - alpha * rho) / (2.0 * alpha * alpha) * s * s, g, slack, x, None);
        upper.record(g, d_x * d_x / (2.0 * (1.0 - alpha * rho)), slack, x, None);
        step.record(s, alpha / (1.0 - alpha * rho) * d_x, slack, x, None);
        at_step.record(d_t, (l + 1.0 / alpha) * s, slack, x, None);

        let phi_u = ev.gap_value(u)?;
        let xu = (x - u).norm_squared();
        let ut = (u - t).norm_squared();
        let rhs = 0.5 * ((1.0 / alpha + l) * xu - (1.0 / alpha - l) * s * s - (1.0 / alpha - rho) * ut);
        lemma.record(phi_t - phi_u, rhs, slack, x, Some(u));
    }

    Ok(PropertyReport {
        problem: problem.name().to_string(),
        lambda: config.lambda,
        alpha,
        lipschitz,
        rho,
        slack,
        n_samples: xs.len(),
        seed: region.seed,
        checks: vec![envelope, decrease, descent, lower, upper, step, at_step, lemma],
    })
}
