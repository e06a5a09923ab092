//! Quantum-trajectory simulator for a molecular Tavis-Cummings model.
//!
//! One lossy cavity mode couples to N identical two-level emitters and to a
//! diatomic molecule with a single nuclear coordinate (Sigma ground and Pi
//! excited surfaces). Open-system dynamics (per-emitter pure dephasing and
//! photon decay) is unraveled into stochastic pure-state trajectories:
//! non-Hermitian short-time Krylov propagation plus per-step Bernoulli
//! quantum jumps, averaged over a seeded, reproducible ensemble.
//!
//! The crate also carries a dense Lindblad density-matrix integrator used as
//! the correctness oracle for small instances, and a polaritonic-surface
//! analysis toolbox (pointwise diagonalization, eigenvector tracking, dark
//! manifold projections).

pub mod basis;
pub mod config;
pub mod curves;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod interp;
pub mod jumps;
pub mod matexp;
pub mod model;
pub mod oracle;
pub mod output;
pub mod params;
pub mod polariton;
pub mod propagator;
pub mod reduced;
pub mod sweep;
pub mod trajectory;
pub mod units;
pub mod vibration;

pub use basis::{initial_state, BasisLayout, Channel, StateVector};
pub use curves::{
    interpolate_to_grid, load_curves, resonance_position, surrogate_curves, GriddedCurves,
    MolecularCurves, SurrogateParams,
};
pub use error::{Result, TcmolError};
pub use grid::SpatialGrid;
pub use hamiltonian::{HamWorkspace, HamiltonianOperator};
pub use jumps::{
    apply_jump, jump_probabilities, sample_jump, JumpKind, JumpOperatorSet, JumpProbabilities,
};
pub use params::{ModelParams, PhysicalParams};
pub use propagator::{arnoldi_step, KrylovWorkspace, LinearOp, PropagatorConfig};
pub use vibration::vibrational_ground;
