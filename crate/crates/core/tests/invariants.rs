use gapvi::diagnostics::{estimate_lipschitz, lipschitz_bound, SampleRegion};
use gapvi::gap::{d_gap_value, GapEvaluator, HomotopyMap};
use gapvi::library::{self, CostPreset};
use gapvi::problem::Mapping;
use gapvi::prox::{solve_pg, t_alpha, SolverConfig, Status};
use gapvi::set::{BoxSet, FeasibleSet};
use gapvi::VIProblem;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn instances() -> Vec<VIProblem> {
    vec![
        library::example_1_2(),
        library::example_1_3(),
        library::example_4_1(),
        library::bimatrix_textbook(),
        library::make_nguyen_dupuis(CostPreset::UniformOnes),
        library::make_nguyen_dupuis(CostPreset::Random(3)),
        library::toy_gan(-2.0),
        library::monotone_control(),
        library::monotone_control_unbounded(),
        library::zero_map(2),
    ]
}

fn one_sample(p: &VIProblem, seed: u64) -> DVector<f64> {
    SampleRegion::for_problem(p, 1, seed).sample(p.feasible_set()).unwrap().remove(0)
}

/// Orthogonal projector onto the directions of the set's affine hull.
fn hull_projector(set: &FeasibleSet) -> DMatrix<f64> {
    let dim = set.dim();
    let mut p = DMatrix::identity(dim, dim);
    if let FeasibleSet::SimplexProduct(s) = set {
        for block in s.blocks() {
            let n = block.range().len() as f64;
            for i in block.range() {
                for j in block.range() {
                    p[(i, j)] -= 1.0 / n;
                }
            }
        }
    }
    p
}

fn vec_in(dim: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-scale..scale, dim).prop_map(DVector::from_vec)
}

fn check_projection(set: &FeasibleSet, z: &DVector<f64>, w: &DVector<f64>) -> Result<(), TestCaseError> {
    let tol = set.proj_tol();
    let (pz, pw) = (set.project(z).unwrap(), set.project(w).unwrap());
    prop_assert!(set.contains(&pz, tol));
    let slack = 10.0 * tol * (1.0 + z.norm() + w.norm());
    prop_assert!((&pz - &pw).norm() <= (z - w).norm() + slack);
    let again = set.project(&pz).unwrap();
    prop_assert!((&again - &pz).amax() <= tol * (1.0 + pz.amax()));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn box_projection(z in vec_in(3, 5.0), w in vec_in(3, 5.0)) {
        let set = FeasibleSet::Box(BoxSet::new(DVector::from_element(3, -1.0), DVector::from_vec(vec![2.0, 1.0, 0.5])).unwrap());
        check_projection(&set, &z, &w)?;
    }

    #[test]
    fn half_open_box_projection(z in vec_in(2, 5.0), w in vec_in(2, 5.0)) {
        check_projection(library::example_1_3().feasible_set(), &z, &w)?;
    }

    #[test]
    fn simplex_product_projection(z in vec_in(5, 3.0), w in vec_in(5, 3.0)) {
        check_projection(library::bimatrix_textbook().feasible_set(), &z, &w)?;
    }

    #[test]
    fn scaled_simplex_projection(seed in any::<u64>(), s in 1.0..500.0f64) {
        let p = library::make_nguyen_dupuis(CostPreset::UniformOnes);
        let dim = p.dim();
        let mut draws = SampleRegion::boxed(DVector::from_element(dim, -s), DVector::from_element(dim, s), 2, seed)
            .sample_n(&FeasibleSet::FullSpace { dim }, 2)
            .unwrap();
        let w = draws.pop().unwrap();
        let z = draws.pop().unwrap();
        check_projection(p.feasible_set(), &z, &w)?;
    }

    #[test]
    fn halfspace_projection(z in vec_in(2, 15.0), w in vec_in(2, 15.0)) {
        check_projection(library::example_4_1().feasible_set(), &z, &w)?;
    }

    #[test]
    fn full_space_projection(z in vec_in(2, 5.0), w in vec_in(2, 5.0)) {
        check_projection(&FeasibleSet::FullSpace { dim: 2 }, &z, &w)?;
        prop_assert_eq!(FeasibleSet::FullSpace { dim: 2 }.project(&z).unwrap(), z);
    }

    #[test]
    fn example_1_2_gap_positive_off_solutions(x in -1.0..=1.0f64) {
        prop_assume!([-1.0, 0.0, 1.0].iter().all(|s: &f64| (x - s).abs() > 1e-6));
        let p = library::example_1_2();
        let ev = GapEvaluator::new(&p, 1.0).unwrap();
        prop_assert!(ev.gap_value(&DVector::from_element(1, x)).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gap_is_nonnegative_and_monotone_in_lambda(seed in any::<u64>()) {
        for p in instances() {
            let x = one_sample(&p, seed);
            let lambda = p.recommended_lambda();
            let ev = GapEvaluator::new(&p, lambda).unwrap();
            let wide = GapEvaluator::new(&p, 2.0 * lambda).unwrap();
            let g = ev.gap_value(&x).unwrap();
            prop_assert!(g >= -1e-12 * (1.0 + ev.problem().eval_f(&x).norm() * x.norm()), "{}: gap {g}", p.name());
            let d = d_gap_value(&wide, &ev, &x).unwrap();
            prop_assert!(d >= -1e-12 * (1.0 + g.abs()), "{}: D-gap {d}", p.name());
        }
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        const H: f64 = 1e-6;
        for p in instances() {
            let ev = GapEvaluator::new(&p, p.recommended_lambda()).unwrap();
            let set = p.feasible_set();
            let x = one_sample(&p, seed);
            let grad = ev.gap_gradient(&x).unwrap();
            let proj = hull_projector(set);
            let face = set.face_signature(&ev.y_lambda(&x).unwrap(), 1e-9);
            let scale = H * (1.0 + x.amax());
            let mut fd = DVector::zeros(x.len());
            let mut smooth = true;
            for i in 0..x.len() {
                let u = proj.column(i).into_owned() * scale;
                let (fwd, bwd) = (&x + &u, &x - &u);
                if !set.contains(&fwd, set.proj_tol()) || !set.contains(&bwd, set.proj_tol())
                    || set.face_signature(&ev.y_lambda(&fwd).unwrap(), 1e-9) != face
                    || set.face_signature(&ev.y_lambda(&bwd).unwrap(), 1e-9) != face
                {
                    smooth = false;
                    break;
                }
                fd[i] = (ev.gap_value(&fwd).unwrap() - ev.gap_value(&bwd).unwrap()) / (2.0 * scale);
            }
            prop_assert!(smooth || !matches!(set, FeasibleSet::FullSpace { .. }), "{}: skipped on a smooth instance", p.name());
            if smooth {
                let exact = &proj * &grad;
                let err = (&exact - &fd).norm() / (1.0 + exact.norm());
                prop_assert!(err <= 1e-4, "{}: gradient error {err:e} at {x:?}", p.name());
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences(seed in any::<u64>()) {
        for p in instances() {
            let x = one_sample(&p, seed);
            let analytic = p.eval_jacobian(&x);
            let fd = p.mapping().finite_difference_jacobian(&x);
            let err = (&analytic - &fd).norm() / analytic.norm().max(1.0);
            prop_assert!(err <= 1e-5, "{}: Jacobian error {err:e}", p.name());
        }
    }

    #[test]
    fn homotopy_endpoints_are_exact(seed in any::<u64>()) {
        for p in instances() {
            let x = one_sample(&p, seed);
            let anchor = Mapping::linear(DMatrix::identity(p.dim(), p.dim())).unwrap();
            let base = HomotopyMap::new(&p, anchor.clone(), 0.0).deform().unwrap();
            let target = HomotopyMap::new(&p, anchor.clone(), 1.0).deform().unwrap();
            prop_assert_eq!(base.eval_f(&x), p.eval_f(&x));
            prop_assert_eq!(target.eval_f(&x), anchor.eval(&x));
        }
    }

    #[test]
    fn pg_outcomes_match_their_status(seed in any::<u64>()) {
        for p in [library::example_1_2(), library::example_4_1(), library::bimatrix_textbook()] {
            let lambda = p.recommended_lambda();
            let config = SolverConfig::recommended(&p, lambda).unwrap();
            let x0 = one_sample(&p, seed);
            let result = solve_pg(&p, &config, &x0).unwrap();
            let x = result.final_point();
            prop_assert!(p.feasible_set().contains(&x, p.feasible_set().proj_tol()));
            let ev = GapEvaluator::new(&p, lambda).unwrap();
            match result.status {
                Status::SolvedVIP => prop_assert!(result.final_gap <= config.eps_gap),
                Status::StationaryNotSolved => {
                    let step = (t_alpha(&ev, config.alpha, &x).unwrap() - &x).norm();
                    prop_assert!(step <= config.eps_stat && result.final_gap > config.eps_gap);
                }
                _ => {}
            }
            let gaps: Vec<f64> = result.trace.records.iter().map(|r| r.gap).collect();
            for pair in gaps.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12 * (1.0 + pair[0]), "{}: gap rose {} -> {}", p.name(), pair[0], pair[1]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lipschitz_estimate_grows_with_the_sample(seed in any::<u64>(), n in 5usize..40) {
        for p in instances() {
            let ev = GapEvaluator::new(&p, p.recommended_lambda()).unwrap();
            let small = estimate_lipschitz(&ev, &SampleRegion::for_problem(&p, n, seed)).unwrap();
            let large = estimate_lipschitz(&ev, &SampleRegion::for_problem(&p, 2 * n, seed)).unwrap();
            prop_assert!(large >= small, "{}: {small} > {large}", p.name());
        }
    }
}

#[test]
fn known_solutions_have_zero_gap() {
    for p in instances() {
        let ev = GapEvaluator::new(&p, p.recommended_lambda()).unwrap();
        for s in p.solutions().representatives() {
            let g = ev.gap_value(&s).unwrap();
            assert!(g <= 1e-8, "{}: gap {g} at {s:?}", p.name());
        }
    }
}

#[test]
fn listed_critical_points_are_fixed() {
    for p in instances() {
        let lambda = p.recommended_lambda();
        let ev = GapEvaluator::new(&p, lambda).unwrap();
        let alpha = 0.9 / lipschitz_bound(&p, lambda).unwrap().max(1e-12);
        for c in &p.meta().critical_points {
            let step = (t_alpha(&ev, alpha, c).unwrap() - c).norm();
            assert!(step <= 1e-8, "{}: |x - T(x)| = {step:e} at {c:?}", p.name());
        }
    }
}

#[test]
fn closed_form_agrees_on_a_grid() {
    let p = library::example_1_2();
    let ev = GapEvaluator::new(&p, 1.0).unwrap();
    for k in 0..10_000 {
        let x = -1.0 + 2.0 * k as f64 / 9_999.0;
        let closed = library::closed_form_gap_example_1_2(x).unwrap();
        let value = ev.gap_value(&DVector::from_element(1, x)).unwrap();
        assert!((closed - value).abs() <= 1e-12, "x = {x}: {closed} vs {value}");
    }
}

#[test]
fn random_games_are_bit_identical() {
    for (n1, n2, max) in [(3, 2, 10), (18, 12, 110)] {
        let a = library::generate_random_bimatrix(n1, n2, max, 42).unwrap();
        let b = library::generate_random_bimatrix(n1, n2, max, 42).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.operator(), b.operator());
    }
}

#[test]
fn sampling_is_deterministic() {
    for p in instances() {
        let region = SampleRegion::for_problem(&p, 50, 9);
        let a = region.sample(p.feasible_set()).unwrap();
        let b = region.sample(p.feasible_set()).unwrap();
        assert_eq!(a, b, "{}", p.name());
        for x in &a {
            assert!(p.feasible_set().contains(x, p.feasible_set().proj_tol()), "{}", p.name());
        }
    }
}
