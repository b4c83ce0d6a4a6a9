//! Dirichlet problems for `Delta_{p,f} z + A z^{p-1} - B F(z) = 0`, the
//! monotone iteration between `phi_inf` and `phi_0`, the obstacle problem
//! and the discrete supersolution checks built on them.

mod checks;
mod dirichlet;
mod monotone;
mod nonlinearity;
mod obstacle;

pub use checks::{
    necessary_condition_check, pasting_min_check, uniform_lower_bound_check, uniform_upper_bound_check, BellanecReport,
    LowerBoundReport, NecessaryReport, Neighborhood, PastingReport, UpperBoundReport, Violation, TOL_PASTE, TOL_SUPER,
};
pub use dirichlet::{
    dirichlet_solve, dirichlet_solve_detailed, dirichlet_solve_sampled, weak_residual, BoundaryData, DirichletSolution,
    SolverOptions,
};
pub use monotone::{
    compute_delta, hardy_margin, monotone_iteration, multi_solution_sequence, Bounds, Coefficients, DeltaReport,
    Ladder, MonotoneOptions, SolveReport, Window,
};
pub use nonlinearity::{Nonlinearity, ScalarFn};
pub use obstacle::{obstacle_solve, ObstacleResult};
