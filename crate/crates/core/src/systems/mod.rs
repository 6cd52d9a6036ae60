//! System models: the SP game class, its reduced model, Hamiltonians and the
//! two built-in examples.

mod boxset;
mod builtin;
mod description;
mod hamiltonian;
mod model;
mod mrn;

pub use boxset::BoxSet;
pub use builtin::{genetic_circuit, genetic_circuit_d_set, genetic_circuit_u_set, integrator_1d};
pub use description::{BoxSpec, BuiltModel, ModelDescription};
pub use hamiltonian::{
    best_response, hamiltonian_maxmin, hamiltonian_minmax, max_min, min_max, minmax_control,
    GameLattice,
};
pub use model::{
    GameDynamics, JointDynamics, MatrixMap, Provenance, ReducedSystem, SpSystem, StateMatrixMap,
    VectorMap,
};
pub use mrn::{mrn, mrn_d_set, mrn_u_set, MrnEdge, MrnModel, MrnNetwork};
