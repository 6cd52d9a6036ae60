//! Grid-based Hamilton-Jacobi-Isaacs solving.

mod field;
mod grid;
pub mod io;
mod payoff;
mod solver;

pub use field::{FieldKind, FieldMeta, ValueField};
pub use grid::{Axis, Grid};
pub use payoff::{PayoffFn, TargetBox};
pub use solver::{
    solve_full_value, solve_reduced_value, solve_value, Solution, SolveOptions, TimeScheme,
    MAX_DIMS,
};
