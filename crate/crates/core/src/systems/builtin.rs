//! Built-in example systems.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::boxset::BoxSet;
use super::model::SpSystem;
use crate::error::{Error, Result};

/// Default control set of the genetic circuit, `[0.1, 1]`.
pub fn genetic_circuit_u_set() -> BoxSet {
    BoxSet::new(vec![0.1], vec![1.0], 2).expect("valid box")
}

/// Default disturbance set of the genetic circuit, `[0.5, 2]^3`.
pub fn genetic_circuit_d_set() -> BoxSet {
    BoxSet::cube(3, 0.5, 2.0, 2).expect("valid box")
}

/// Negative-feedback genetic circuit with one slow and one fast state.
///
/// `z` is the active transcription factor, `y` the inactive one, `u` the
/// inducer and `d = (kinase activity, growth rate, gene activity)`:
///
/// ```text
///   z' = alpha d1 y - d2 z
/// eps y' = d3 u^2 / (u^2 + z^2) - d1 y
/// ```
///
/// Factored as `f = -d2 z`, `g = d3 u^2/(u^2+z^2)`, `M = -alpha`, `A = -d1`.
pub fn genetic_circuit(alpha: f64) -> Result<SpSystem> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    SpSystem::new(
        "genetic_circuit",
        1,
        1,
        Arc::new(|z, _u, d| DVector::from_element(1, -d[1] * z[0])),
        Arc::new(|z, u, d| {
            let u2 = u[0] * u[0];
            DVector::from_element(1, d[2] * u2 / (u2 + z[0] * z[0]))
        }),
        Arc::new(move |_z| DMatrix::from_element(1, 1, -alpha)),
        Arc::new(|_z, _u, d| DMatrix::from_element(1, 1, -d[0])),
        genetic_circuit_u_set(),
        genetic_circuit_d_set(),
    )
}

/// Single integrator `z' = u` on `U = [-1, 1]`, `D = {0}`, with a decoupled
/// stable fast state. Its reduced model is `z' = u`.
pub fn integrator_1d() -> Result<SpSystem> {
    SpSystem::new(
        "integrator_1d",
        1,
        1,
        Arc::new(|_z, u, _d| DVector::from_element(1, u[0])),
        Arc::new(|_z, _u, _d| DVector::zeros(1)),
        Arc::new(|_z| DMatrix::zeros(1, 1)),
        Arc::new(|_z, _u, _d| DMatrix::from_element(1, 1, -1.0)),
        BoxSet::new(vec![-1.0], vec![1.0], 2)?,
        BoxSet::point(vec![0.0])?,
    )
}
