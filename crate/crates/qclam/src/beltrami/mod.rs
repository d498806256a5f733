//! Beltrami coefficients, principal solutions and mollification.

mod field;
mod mollify;
mod solver;

pub use field::BeltramiField;
pub use mollify::{convolve_bump, mollify, MollifierSpec};
pub use solver::{
    dilatation_at, max_iterations, p_max, principal_solution, QCMap, SolveDiagnostics, DEFAULT_TOL,
    ITERATION_MARGIN,
};
