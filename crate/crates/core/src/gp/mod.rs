//! Geometric programs: posynomial modeling and a barrier solver.

mod model;
mod solver;

pub use model::{evaluate, normalize, widen, GpProblem, Monomial, Posynomial};
pub use solver::{
    solve, GpSolution, GpStatus, FEAS_TOL, GAP_TOL, NEWTON_CAP, OBJECTIVE_FLOOR, X_MAX, X_MIN,
};
