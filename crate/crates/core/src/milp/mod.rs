//! Solver-agnostic MILP representation, an LP engine and file formats.

mod lp_format;
mod model;
mod mps;
mod simplex;

pub use lp_format::{read_lp, write_lp};
pub use model::{Constraint, Model, ObjSense, Sense, VarType, Variable};
pub use mps::{read_mps, write_mps};
pub use simplex::{solve_lp_relaxation, DualSimplex, LpSolution, LpStatus, FEAS_TOL, INT_TOL};
