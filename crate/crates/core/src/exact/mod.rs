//! Exact evolution of the full system plus discrete-bath covariance matrix.

pub mod hamiltonian;
pub mod invariants;
pub mod propagate;
pub mod trace;

pub use hamiltonian::{
    build_model, build_position_model, build_symmetric_model, CouplingModel, DriftMatrix,
    OscillatorParams,
};
pub use invariants::{InvariantReport, InvariantTolerances};
pub use propagate::{evolve, expm, rk4_step, EvolutionConfig, Integrator, Propagator};
pub use trace::{
    initial_covariance, negativity_trace, reduce_to_system, reduced_from_rows, ReducedDynamics, TraceRow,
};
