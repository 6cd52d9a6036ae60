//! Hamilton-Jacobi reachability for singularly perturbed zero-sum
//! differential games.
//!
//! The crate derives the reduced slow model of a two-timescale game, solves
//! the reduced (and, at desk scale, the full) Hamilton-Jacobi-Isaacs
//! equation on a grid, turns the reduced value function into inner and
//! outer approximations of the backward reachable set with an explicit
//! margin, checks the standing assumptions numerically and simulates
//! feedback experiments.

// Negated comparisons double as NaN rejection in input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod error;
pub mod hj;
pub mod reach;
pub mod sim;
pub mod systems;

pub use error::{Error, Result};

pub use hj::{Grid, PayoffFn, ValueField};
pub use reach::{ContainmentReport, ReachBounds};
pub use systems::{BoxSet, ReducedSystem, SpSystem};
