//! Toy GAN: a linear generator `theta` against a logistic discriminant `phi`,
//! with loss `L(theta, phi) = -log(1 + exp(-phi^T w)) - log(1 + exp(phi^T theta))`
//! for the true parameter `w`. The saddle-point VI is unconstrained with
//!
//! ```text
//! F(theta, phi) = ( -s(u) phi,  -s(v) w + s(u) theta ),   u = phi^T theta,  v = -phi^T w,
//! ```
//!
//! where `s` is the logistic sigmoid.
//!
//! Jacobian, with `s' = s (1 - s)`:
//!
//! ```text
//! dF1/dtheta = -s'(u) phi phi^T          dF1/dphi = -s(u) I - s'(u) phi theta^T
//! dF2/dtheta =  s(u) I + s'(u) theta phi^T
//! dF2/dphi   =  s'(v) w w^T + s'(u) theta theta^T
//! ```

use nalgebra::{DMatrix, DVector};

use crate::problem::{Mapping, ProblemMeta, SolutionSet, VIProblem};
use crate::set::FeasibleSet;

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn sigmoid_prime(u: f64) -> f64 {
    let s = sigmoid(u);
    s * (1.0 - s)
}

fn gan_map(w: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let d = w.len();
    let theta = x.rows(0, d);
    let phi = x.rows(d, d);
    let su = sigmoid(phi.dot(&theta));
    let sv = sigmoid(-phi.dot(w));
    let mut out = DVector::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&(-su * phi));
    out.rows_mut(d, d).copy_from(&(-sv * w + su * theta));
    out
}

fn gan_jacobian(w: &DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let d = w.len();
    let theta = x.rows(0, d).into_owned();
    let phi = x.rows(d, d).into_owned();
    let u = phi.dot(&theta);
    let v = -phi.dot(w);
    let (su, du, dv) = (sigmoid(u), sigmoid_prime(u), sigmoid_prime(v));
    let eye = DMatrix::<f64>::identity(d, d);
    let mut jac = DMatrix::zeros(2 * d, 2 * d);
    jac.view_mut((0, 0), (d, d)).copy_from(&(-du * &phi * phi.transpose()));
    jac.view_mut((0, d), (d, d)).copy_from(&(-su * &eye - du * &phi * theta.transpose()));
    jac.view_mut((d, 0), (d, d)).copy_from(&(su * &eye + du * &theta * phi.transpose()));
    jac.view_mut((d, d), (d, d)).copy_from(&(dv * w * w.transpose() + du * &theta * theta.transpose()));
    jac
}

/// Toy GAN for a general true parameter `omega_star`; the solution is
/// `(theta, phi) = (omega_star, 0)`.
pub fn make_toy_gan(omega_star: DVector<f64>) -> VIProblem {
    let d = omega_star.len();
    assert!(d > 0 && omega_star.iter().all(|v| v.is_finite()), "omega_star must be finite and nonempty");
    let w_map = omega_star.clone();
    let w_jac = omega_star.clone();
    let mapping = Mapping::smooth(
        2 * d,
        move |x: &DVector<f64>| gan_map(&w_map, x),
        Some(move |x: &DVector<f64>| gan_jacobian(&w_jac, x)),
    );
    let mut solution = DVector::zeros(2 * d);
    solution.rows_mut(0, d).copy_from(&omega_star);
    // For d = 1 the Minty value against the solution is
    // 2 phi [s(2 phi) - s(theta phi)], negative once theta > -omega_star;
    // the theta range reaches past that.
    let mut lower = DVector::from_element(2 * d, -4.0);
    let mut upper = DVector::from_element(2 * d, 4.0);
    for i in 0..d {
        lower[i] = omega_star[i] - 6.0;
        upper[i] = omega_star[i] + 6.0;
    }
    VIProblem::new("toy_gan", mapping, FeasibleSet::FullSpace { dim: 2 * d })
        .and_then(|p| p.with_solutions(SolutionSet::points([solution])))
        .expect("toy GAN is well formed")
        .with_meta(ProblemMeta {
            recommended_lambda: Some(0.5),
            sample_box: Some((lower, upper)),
            ..ProblemMeta::default()
        })
}

/// One-dimensional toy GAN with scalar `omega_star`.
pub fn toy_gan(omega_star: f64) -> VIProblem {
    make_toy_gan(DVector::from_element(1, omega_star))
}
