//! Cluster-state (measurement-based) quantum computation.
//!
//! A [`LogicalCircuit`](compiler::LogicalCircuit) of `H·Zrot(α)` rotations
//! and controlled-phase junctions compiles to a [`ClusterGraph`] plus a
//! [`MeasurementPattern`] whose dependency sets carry the classical
//! feedforward. [`flow::execute`] runs a pattern on a dense statevector and
//! [`verify`] checks every outcome branch against the logical circuit.

pub mod cluster;
pub mod compiler;
pub mod flow;
pub mod random;
pub mod statevector;
pub mod verify;

pub use cluster::{ClusterGraph, NodeId, QubitRole, WireId};
pub use compiler::{compile, CompiledCircuit, LogicalCircuit, LogicalOp};
pub use flow::{
    execute, MeasurementPattern, MeasurementStep, OutcomePolicy, OutputCorrection, RunResult,
};
pub use statevector::{Complex, Gate, Qubit, StateVector};
pub use verify::{enumerate_branches, BranchReport, OracleSpec};
