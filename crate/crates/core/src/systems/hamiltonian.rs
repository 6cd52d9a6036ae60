//! Lattice min-max evaluation of `lambda^T F(x, u, d)` over `U x D`.
//!
//! The grid solver, the Hamiltonian queries and the feedback law all go
//! through [`GameLattice::fill_table`] and [`min_max`], so cached and
//! uncached evaluations are bit-identical.

use super::model::{GameDynamics, ReducedSystem};
use crate::error::{check_len, Error, Result};

/// Sample lattices of the control and disturbance sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GameLattice {
    pub controls: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
}

impl GameLattice {
    pub fn of<G: GameDynamics + ?Sized>(dynamics: &G) -> Self {
        Self {
            controls: dynamics.u_set().lattice(),
            disturbances: dynamics.d_set().lattice(),
        }
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn n_disturbances(&self) -> usize {
        self.disturbances.len()
    }

    /// Number of entries in the table for a state of dimension `dim`.
    pub fn table_len(&self, dim: usize) -> usize {
        self.controls.len() * self.disturbances.len() * dim
    }

    /// Fills `table[(iu * nd + id) * dim + k] = F_k(x, u_iu, d_id)`.
    pub fn fill_table<G: GameDynamics + ?Sized>(
        &self,
        dynamics: &G,
        x: &[f64],
        table: &mut [f64],
    ) -> Result<()> {
        let dim = dynamics.state_dim();
        let nd = self.disturbances.len();
        for (iu, u) in self.controls.iter().enumerate() {
            for (id, d) in self.disturbances.iter().enumerate() {
                let out = &mut table[(iu * nd + id) * dim..(iu * nd + id + 1) * dim];
                dynamics.eval_into(x, u, d, out)?;
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numerical(format!(
                        "non-finite dynamics at x = {x:?}, u = {u:?}, d = {d:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn dot(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `min_u max_d p^T F` over a filled table. Returns the value and the
/// minimising control index; the lowest index wins ties.
#[inline]
pub fn min_max(table: &[f64], p: &[f64], n_u: usize, n_d: usize) -> (f64, usize) {
    let dim = p.len();
    let mut best = f64::INFINITY;
    let mut best_u = 0;
    for iu in 0..n_u {
        let mut worst = f64::NEG_INFINITY;
        for id in 0..n_d {
            let o = (iu * n_d + id) * dim;
            let v = dot(p, &table[o..o + dim]);
            if v > worst {
                worst = v;
            }
        }
        if worst < best {
            best = worst;
            best_u = iu;
        }
    }
    (best, best_u)
}

/// `max_d min_u p^T F` over a filled table. Returns the value and the
/// maximising disturbance index; the lowest index wins ties.
#[inline]
pub fn max_min(table: &[f64], p: &[f64], n_u: usize, n_d: usize) -> (f64, usize) {
    let dim = p.len();
    let mut best = f64::NEG_INFINITY;
    let mut best_d = 0;
    for id in 0..n_d {
        let mut least = f64::INFINITY;
        for iu in 0..n_u {
            let o = (iu * n_d + id) * dim;
            let v = dot(p, &table[o..o + dim]);
            if v < least {
                least = v;
            }
        }
        if least > best {
            best = least;
            best_d = id;
        }
    }
    (best, best_d)
}

/// Disturbance index maximising `p^T F(x, u_iu, d)` for a fixed control.
pub fn best_response(table: &[f64], p: &[f64], iu: usize, n_d: usize) -> usize {
    let dim = p.len();
    let mut worst = f64::NEG_INFINITY;
    let mut arg = 0;
    for id in 0..n_d {
        let o = (iu * n_d + id) * dim;
        let v = dot(p, &table[o..o + dim]);
        if v > worst {
            worst = v;
            arg = id;
        }
    }
    arg
}

fn table_at(red: &ReducedSystem, z: &[f64], lambda: &[f64]) -> Result<(GameLattice, Vec<f64>)> {
    check_len("z", red.n_z(), z)?;
    check_len("lambda", red.n_z(), lambda)?;
    let lattice = GameLattice::of(red);
    let mut table = vec![0.0; lattice.table_len(red.n_z())];
    lattice.fill_table(red, z, &mut table)?;
    Ok((lattice, table))
}

/// `H(z, lambda) = min_u max_d lambda^T F(z, u, d)` on the sample lattices.
pub fn hamiltonian_minmax(red: &ReducedSystem, z: &[f64], lambda: &[f64]) -> Result<f64> {
    let (lat, table) = table_at(red, z, lambda)?;
    Ok(min_max(&table, lambda, lat.n_controls(), lat.n_disturbances()).0)
}

/// `max_d min_u lambda^T F(z, u, d)` on the sample lattices.
pub fn hamiltonian_maxmin(red: &ReducedSystem, z: &[f64], lambda: &[f64]) -> Result<f64> {
    let (lat, table) = table_at(red, z, lambda)?;
    Ok(max_min(&table, lambda, lat.n_controls(), lat.n_disturbances()).0)
}

/// The control attaining `hamiltonian_minmax`.
pub fn minmax_control(red: &ReducedSystem, z: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    let (lat, table) = table_at(red, z, lambda)?;
    let (_, iu) = min_max(&table, lambda, lat.n_controls(), lat.n_disturbances());
    Ok(lat.controls[iu].clone())
}
