//! Singularly perturbed systems and their reduced models.
//!
//! The slow state `z` and fast state `y` evolve as
//!
//! ```text
//!   z' = f(z,u,d) + M(z) A(z,u,d) y
//! eps y' = g(z,u,d) + A(z,u,d) y
//! ```
//!
//! and eliminating `y` at its quasi-steady state gives the reduced slow
//! dynamics `z' = F(z,u,d) = f(z,u,d) - M(z) g(z,u,d)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::boxset::BoxSet;
use crate::error::{check_len, Error, Result};

pub type VectorMap = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> DVector<f64> + Send + Sync>;
pub type MatrixMap = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;
pub type StateMatrixMap = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Dynamics of a two-player game in a single state vector `x`.
///
/// This is the view the grid solver and the Hamiltonian routines work with:
/// either a reduced model (`x = z`) or an SP system at a fixed `eps`
/// (`x = (z, y)`).
pub trait GameDynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn u_set(&self) -> &BoxSet;
    fn d_set(&self) -> &BoxSet;
    /// Writes `x'` into `out` (length `state_dim`).
    fn eval_into(&self, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) -> Result<()>;
}

/// A singularly perturbed game `(f, g, M, A, U, D)`. `eps` is not stored.
#[derive(Clone)]
pub struct SpSystem {
    name: String,
    n_z: usize,
    n_y: usize,
    f: VectorMap,
    g: VectorMap,
    m: StateMatrixMap,
    a: MatrixMap,
    u_set: BoxSet,
    d_set: BoxSet,
}

impl fmt::Debug for SpSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpSystem")
            .field("name", &self.name)
            .field("n_z", &self.n_z)
            .field("n_y", &self.n_y)
            .field("u_set", &self.u_set)
            .field("d_set", &self.d_set)
            .finish_non_exhaustive()
    }
}

impl SpSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n_z: usize,
        n_y: usize,
        f: VectorMap,
        g: VectorMap,
        m: StateMatrixMap,
        a: MatrixMap,
        u_set: BoxSet,
        d_set: BoxSet,
    ) -> Result<Self> {
        if n_z == 0 || n_y == 0 {
            return Err(Error::Domain("state dimensions must be positive".into()));
        }
        let sys = Self {
            name: name.into(),
            n_z,
            n_y,
            f,
            g,
            m,
            a,
            u_set,
            d_set,
        };
        // Probe once at the origin and the first lattice point so that
        // mis-shaped maps fail at construction.
        let z = vec![0.0; n_z];
        let u = sys.u_set.lower().to_vec();
        let d = sys.d_set.lower().to_vec();
        sys.f(&z, &u, &d)?;
        sys.g(&z, &u, &d)?;
        sys.m(&z)?;
        sys.a(&z, &u, &d)?;
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn u_set(&self) -> &BoxSet {
        &self.u_set
    }

    pub fn d_set(&self) -> &BoxSet {
        &self.d_set
    }

    pub fn with_sets(mut self, u_set: BoxSet, d_set: BoxSet) -> Result<Self> {
        if u_set.dim() != self.u_set.dim() {
            return Err(Error::dims("u_set", self.u_set.dim(), u_set.dim()));
        }
        if d_set.dim() != self.d_set.dim() {
            return Err(Error::dims("d_set", self.d_set.dim(), d_set.dim()));
        }
        self.u_set = u_set;
        self.d_set = d_set;
        Ok(self)
    }

    fn check_inputs(&self, z: &[f64], u: &[f64], d: &[f64]) -> Result<()> {
        check_len("z", self.n_z, z)?;
        check_len("u", self.u_set.dim(), u)?;
        check_len("d", self.d_set.dim(), d)
    }

    pub fn f(&self, z: &[f64], u: &[f64], d: &[f64]) -> Result<DVector<f64>> {
        self.check_inputs(z, u, d)?;
        let v = (self.f)(z, u, d);
        if v.len() != self.n_z {
            return Err(Error::dims("f", self.n_z, v.len()));
        }
        Ok(v)
    }

    pub fn g(&self, z: &[f64], u: &[f64], d: &[f64]) -> Result<DVector<f64>> {
        self.check_inputs(z, u, d)?;
        let v = (self.g)(z, u, d);
        if v.len() != self.n_y {
            return Err(Error::dims("g", self.n_y, v.len()));
        }
        Ok(v)
    }

    pub fn m(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        check_len("z", self.n_z, z)?;
        let m = (self.m)(z);
        if m.shape() != (self.n_z, self.n_y) {
            return Err(Error::dims("M", self.n_z * self.n_y, m.len()));
        }
        Ok(m)
    }

    pub fn a(&self, z: &[f64], u: &[f64], d: &[f64]) -> Result<DMatrix<f64>> {
        self.check_inputs(z, u, d)?;
        let a = (self.a)(z, u, d);
        if a.shape() != (self.n_y, self.n_y) {
            return Err(Error::dims("A", self.n_y * self.n_y, a.len()));
        }
        Ok(a)
    }

    /// Right-hand side of the SP system: `(z', y')`.
    pub fn eval_rhs(
        &self,
        eps: f64,
        z: &[f64],
        y: &[f64],
        u: &[f64],
        d: &[f64],
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        check_len("y", self.n_y, y)?;
        let a = self.a(z, u, d)?;
        let yv = DVector::from_column_slice(y);
        let ay = &a * &yv;
        let zdot = self.f(z, u, d)? + self.m(z)? * &ay;
        let ydot = (self.g(z, u, d)? + ay) / eps;
        Ok((zdot, ydot))
    }

    /// The reduced model `F = f - M g`.
    pub fn reduce(&self) -> ReducedSystem {
        let (f, g, m) = (self.f.clone(), self.g.clone(), self.m.clone());
        let big_f: VectorMap = Arc::new(move |z, u, d| reduced_rhs(&f, &g, &m, z, u, d));
        ReducedSystem {
            name: format!("{} (reduced)", self.name),
            n_z: self.n_z,
            rhs: big_f,
            u_set: self.u_set.clone(),
            d_set: self.d_set.clone(),
            provenance: Provenance::Derived(self.name.clone()),
        }
    }

    /// The joint dynamics at a fixed `eps`, as a game on `x = (z, y)`.
    pub fn at_eps(&self, eps: f64) -> Result<JointDynamics<'_>> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        Ok(JointDynamics { sys: self, eps })
    }
}

/// `f - M g`, shared by the derived reduced model and by the consistency tests.
fn reduced_rhs(
    f: &VectorMap,
    g: &VectorMap,
    m: &StateMatrixMap,
    z: &[f64],
    u: &[f64],
    d: &[f64],
) -> DVector<f64> {
    f(z, u, d) - m(z) * g(z, u, d)
}

/// Where a reduced model came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Derived from the named SP system.
    Derived(String),
    Handwritten,
}

/// Slow-only dynamics `z' = F(z, u, d)`.
#[derive(Clone)]
pub struct ReducedSystem {
    name: String,
    n_z: usize,
    rhs: VectorMap,
    u_set: BoxSet,
    d_set: BoxSet,
    provenance: Provenance,
}

impl fmt::Debug for ReducedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedSystem")
            .field("name", &self.name)
            .field("n_z", &self.n_z)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl ReducedSystem {
    /// A handwritten slow model.
    pub fn new(
        name: impl Into<String>,
        n_z: usize,
        rhs: VectorMap,
        u_set: BoxSet,
        d_set: BoxSet,
    ) -> Result<Self> {
        let red = Self {
            name: name.into(),
            n_z,
            rhs,
            u_set,
            d_set,
            provenance: Provenance::Handwritten,
        };
        red.eval(&vec![0.0; n_z], red.u_set.lower(), red.d_set.lower())?;
        Ok(red)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn u_set(&self) -> &BoxSet {
        &self.u_set
    }

    pub fn d_set(&self) -> &BoxSet {
        &self.d_set
    }

    pub fn with_sets(mut self, u_set: BoxSet, d_set: BoxSet) -> Result<Self> {
        if u_set.dim() != self.u_set.dim() || d_set.dim() != self.d_set.dim() {
            return Err(Error::dims("u_set/d_set", self.u_set.dim(), u_set.dim()));
        }
        self.u_set = u_set;
        self.d_set = d_set;
        Ok(self)
    }

    pub fn eval(&self, z: &[f64], u: &[f64], d: &[f64]) -> Result<DVector<f64>> {
        check_len("z", self.n_z, z)?;
        check_len("u", self.u_set.dim(), u)?;
        check_len("d", self.d_set.dim(), d)?;
        let v = (self.rhs)(z, u, d);
        if v.len() != self.n_z {
            return Err(Error::dims("F", self.n_z, v.len()));
        }
        Ok(v)
    }
}

impl GameDynamics for ReducedSystem {
    fn state_dim(&self) -> usize {
        self.n_z
    }

    fn u_set(&self) -> &BoxSet {
        &self.u_set
    }

    fn d_set(&self) -> &BoxSet {
        &self.d_set
    }

    fn eval_into(&self, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        let v = self.eval(x, u, d)?;
        out.copy_from_slice(v.as_slice());
        Ok(())
    }
}

/// SP dynamics at fixed `eps` on the stacked state `x = (z, y)`.
#[derive(Debug, Clone, Copy)]
pub struct JointDynamics<'a> {
    sys: &'a SpSystem,
    eps: f64,
}

impl JointDynamics<'_> {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn system(&self) -> &SpSystem {
        self.sys
    }
}

impl GameDynamics for JointDynamics<'_> {
    fn state_dim(&self) -> usize {
        self.sys.n_z + self.sys.n_y
    }

    fn u_set(&self) -> &BoxSet {
        &self.sys.u_set
    }

    fn d_set(&self) -> &BoxSet {
        &self.sys.d_set
    }

    fn eval_into(&self, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("x", self.state_dim(), x)?;
        let (z, y) = x.split_at(self.sys.n_z);
        let (zdot, ydot) = self.sys.eval_rhs(self.eps, z, y, u, d)?;
        out[..self.sys.n_z].copy_from_slice(zdot.as_slice());
        out[self.sys.n_z..].copy_from_slice(ydot.as_slice());
        Ok(())
    }
}
