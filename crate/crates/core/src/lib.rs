//! Gap-function reformulation of variational inequalities.
//!
//! A variational inequality asks for `x* in X` with `<F(x*), x - x*> >= 0`
//! for all `x in X`. The regularized gap function turns this into a
//! nonconvex composite minimization, solved here by proximal gradient and
//! by a homotopy continuation in a strongly monotone deformation of `F`.

pub mod diagnostics;
pub mod error;
pub mod gap;
pub mod homotopy;
pub mod library;
pub mod problem;
pub mod prox;
pub mod set;

pub use error::{Error, Result};
pub use gap::{GapEvaluator, GapPoint, HomotopyMap};
pub use homotopy::{solve_homotopy, HomotopyConfig, HomotopyResult, HomotopyStatus};
pub use problem::{Mapping, SolutionSet, VIProblem};
pub use prox::{solve_pg, SolverConfig, SolverResult, Status, StepRule};
pub use set::FeasibleSet;
