//! Solver-agnostic conic modeling: affine expressions, linear, second-order
//! and PSD constraints, convex quadratic objectives.

mod cbf;
mod program;
mod solve;

pub use cbf::write_cbf;
pub use program::{AffineExpr, ConicProgram, Constraint, Objective, Sense, SymExpr, VarId};
pub use solve::{
    solve, solve_batch, solve_batch_with, ClarabelBackend, ConicBackend, SolveReport, SolveStats, SolveStatus,
    SolverSettings,
};
