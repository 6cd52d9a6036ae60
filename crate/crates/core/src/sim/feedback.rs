use crate::error::{Error, Result};
use crate::hj::ValueField;
use crate::systems::{best_response, min_max, GameLattice, ReducedSystem};

/// The value-gradient feedback law
/// `u*(t, z) = argmin_u max_d grad V(t, z)' F(z, u, d)` on the sample
/// lattices, using the stored snapshot nearest in time. It ignores the fast
/// state by construction.
#[derive(Debug, Clone)]
pub struct FeedbackPolicy {
    snapshots: Vec<ValueField>,
    red: ReducedSystem,
    lattice: GameLattice,
}

impl FeedbackPolicy {
    pub fn new(snapshots: Vec<ValueField>, red: ReducedSystem) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::Config(
                "feedback synthesis needs at least one field".into(),
            ));
        };
        for s in &snapshots {
            if s.grid != first.grid {
                return Err(Error::Config(
                    "feedback snapshots must share one grid".into(),
                ));
            }
        }
        if first.grid.n_dims() != red.n_z() {
            return Err(Error::dims("field grid", red.n_z(), first.grid.n_dims()));
        }
        let lattice = GameLattice::of(&red);
        Ok(Self {
            snapshots,
            red,
            lattice,
        })
    }

    pub fn reduced(&self) -> &ReducedSystem {
        &self.red
    }

    pub fn snapshots(&self) -> &[ValueField] {
        &self.snapshots
    }

    /// Nearest snapshot in time; ties go to the lowest index.
    pub fn snapshot_at(&self, t: f64) -> &ValueField {
        let mut best = &self.snapshots[0];
        for s in &self.snapshots[1..] {
            if (s.time - t).abs() < (best.time - t).abs() {
                best = s;
            }
        }
        best
    }

    pub fn gradient(&self, t: f64, z: &[f64]) -> Result<Vec<f64>> {
        self.snapshot_at(t).gradient_at(z)
    }

    fn table(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut table = vec![0.0; self.lattice.table_len(self.red.n_z())];
        self.lattice.fill_table(&self.red, z, &mut table)?;
        Ok(table)
    }

    /// Control for a given costate (ties to the lowest lattice index).
    pub fn control_for_gradient(&self, z: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        let table = self.table(z)?;
        let (nu, nd) = (self.lattice.n_controls(), self.lattice.n_disturbances());
        let (_, iu) = min_max(&table, grad, nu, nd);
        Ok(self.lattice.controls[iu].clone())
    }

    /// `u*(t, z)`; `z` must be one cell inside the grid.
    pub fn control(&self, t: f64, z: &[f64]) -> Result<Vec<f64>> {
        let grad = self.gradient(t, z)?;
        self.control_for_gradient(z, &grad)
    }

    /// Disturbance maximising `grad V' F(z, u, d)` for the applied control,
    /// taken from the lattice. The control itself need not lie on it.
    pub fn disturbance(&self, t: f64, z: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let grad = self.gradient(t, z)?;
        let ds = &self.lattice.disturbances;
        let mut table = Vec::with_capacity(ds.len() * z.len());
        for d in ds {
            table.extend(self.red.eval(z, u, d)?.iter());
        }
        let id = best_response(&table, &grad, 0, ds.len());
        Ok(ds[id].clone())
    }
}
