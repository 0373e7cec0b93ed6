//! Brute-force reference: dense logical-circuit unitaries, exhaustive
//! outcome enumeration, and the circuit-deformation identities behind the
//! feedforward rules.
//!
//! The reference path never goes through [`StateVector`]; it builds its own
//! matrices so that a simulator bug cannot hide an algebra bug.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cluster::{ClusterGraph, NodeId};
use crate::compiler::{chain_angles, compile, CompileError, CompiledCircuit, LogicalCircuit};
use crate::flow::{
    apply_output_corrections, execute_step, FlowError, MeasurementPattern, OutcomeLog, RunResult,
};
use crate::random;
use crate::statevector::{
    Complex, Gate, MeasurePolicy, PhaseComparison, Qubit, StateError, StateVector,
};

/// Widest logical circuit for which a dense unitary is built.
pub const MAX_ORACLE_WIRES: usize = 12;

/// Largest number of measurements enumerated exhaustively.
pub const MAX_ENUMERATED_MEASUREMENTS: usize = 20;

/// Exact algebraic identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// End-to-end fidelities and probabilities.
pub const FIDELITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("oracle over {0} wires exceeds the {MAX_ORACLE_WIRES}-wire matrix limit")]
    OracleTooLarge(usize),
    #[error("oracle op refers to slot {slot} of a {num_wires}-wire circuit")]
    BadSlot { slot: usize, num_wires: usize },
    #[error("{0} measurements exceed the enumeration bound of {MAX_ENUMERATED_MEASUREMENTS}")]
    TooManyBranches(usize),
    #[error("oracle has {inputs} inputs and {outputs} outputs for {num_wires} wires")]
    Shape {
        num_wires: usize,
        inputs: usize,
        outputs: usize,
    },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// One logical op of the reference circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOp {
    /// `H·Zrot(alpha)` on a slot.
    Rot { slot: usize, alpha: f64 },
    /// `CZ`, then `H·Zrot` on each slot when angles are given.
    Junction {
        slots: (usize, usize),
        angles: Option<(f64, f64)>,
    },
}

/// The logical circuit a pattern should realize. Slot `i` is bit `i` of the
/// logical amplitude index and is read out at `outputs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub num_wires: usize,
    pub ops: Vec<OracleOp>,
    pub inputs: Vec<Qubit>,
    pub outputs: Vec<NodeId>,
}

impl OracleSpec {
    fn check(&self) -> Result<(), VerifyError> {
        if self.inputs.len() != self.num_wires || self.outputs.len() != self.num_wires {
            return Err(VerifyError::Shape {
                num_wires: self.num_wires,
                inputs: self.inputs.len(),
                outputs: self.outputs.len(),
            });
        }
        for op in &self.ops {
            let slots = match *op {
                OracleOp::Rot { slot, .. } => vec![slot],
                OracleOp::Junction { slots: (a, b), .. } => vec![a, b],
            };
            if let Some(&slot) = slots.iter().find(|&&s| s >= self.num_wires) {
                return Err(VerifyError::BadSlot {
                    slot,
                    num_wires: self.num_wires,
                });
            }
        }
        Ok(())
    }
}

fn hz(alpha: f64) -> Matrix2<Complex> {
    Gate::H.matrix2().unwrap() * Gate::Zrot(alpha).matrix2().unwrap()
}

fn to_dense(m: &Matrix2<Complex>) -> DMatrix<Complex> {
    DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
}

/// `g` on `slot` of an `n`-slot register, slot 0 least significant.
fn embed(g: &Matrix2<Complex>, slot: usize, n: usize) -> DMatrix<Complex> {
    let high = DMatrix::<Complex>::identity(1 << (n - 1 - slot), 1 << (n - 1 - slot));
    let low = DMatrix::<Complex>::identity(1 << slot, 1 << slot);
    high.kronecker(&to_dense(g)).kronecker(&low)
}

fn cz_diag(a: usize, b: usize, n: usize) -> DMatrix<Complex> {
    let mask = (1usize << a) | (1usize << b);
    let d = DVector::from_fn(1 << n, |i, _| {
        if i & mask == mask {
            Complex::new(-1.0, 0.0)
        } else {
            Complex::new(1.0, 0.0)
        }
    });
    DMatrix::from_diagonal(&d)
}

/// Dense unitary of the reference circuit.
pub fn oracle_unitary(spec: &OracleSpec) -> Result<DMatrix<Complex>, VerifyError> {
    let n = spec.num_wires;
    if n > MAX_ORACLE_WIRES {
        return Err(VerifyError::OracleTooLarge(n));
    }
    spec.check()?;
    let mut u = DMatrix::<Complex>::identity(1 << n, 1 << n);
    for op in &spec.ops {
        let layer = match *op {
            OracleOp::Rot { slot, alpha } => embed(&hz(alpha), slot, n),
            OracleOp::Junction {
                slots: (a, b),
                angles,
            } => {
                let cz = cz_diag(a, b, n);
                match angles {
                    Some((x, y)) => embed(&hz(x), a, n) * embed(&hz(y), b, n) * cz,
                    None => cz,
                }
            }
        };
        u = layer * u;
    }
    Ok(u)
}

/// Tensor product of the reference inputs, slot 0 least significant.
pub fn oracle_input(spec: &OracleSpec) -> Result<Vec<Complex>, VerifyError> {
    spec.check()?;
    Ok((0..1usize << spec.num_wires)
        .map(|idx| {
            spec.inputs
                .iter()
                .enumerate()
                .fold(Complex::new(1.0, 0.0), |acc, (s, q)| {
                    acc * if idx >> s & 1 == 1 { q.one } else { q.zero }
                })
        })
        .collect())
}

/// The reference output state, computed op by op without building the
/// dense unitary.
pub fn oracle_output(spec: &OracleSpec) -> Result<Vec<Complex>, VerifyError> {
    let mut psi = oracle_input(spec)?;
    let apply = |psi: &mut Vec<Complex>, g: &Matrix2<Complex>, slot: usize| {
        let mask = 1usize << slot;
        for i0 in (0..psi.len()).filter(|i| i & mask == 0) {
            let (a0, a1) = (psi[i0], psi[i0 | mask]);
            psi[i0] = g[(0, 0)] * a0 + g[(0, 1)] * a1;
            psi[i0 | mask] = g[(1, 0)] * a0 + g[(1, 1)] * a1;
        }
    };
    for op in &spec.ops {
        match *op {
            OracleOp::Rot { slot, alpha } => apply(&mut psi, &hz(alpha), slot),
            OracleOp::Junction {
                slots: (a, b),
                angles,
            } => {
                let mask = (1usize << a) | (1usize << b);
                for (i, amp) in psi.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
                if let Some((x, y)) = angles {
                    apply(&mut psi, &hz(x), a);
                    apply(&mut psi, &hz(y), b);
                }
            }
        }
    }
    Ok(psi)
}

/// The logical state left on the output qubits of a finished run. Measured
/// qubits are collapsed, so the register factorizes.
pub fn output_state(run: &RunResult, outputs: &[NodeId]) -> Vec<Complex> {
    let state = &run.state;
    let base: usize = (0..state.num_qubits())
        .filter(|&q| state.collapsed(q) == Some(true))
        .map(|q| 1usize << q)
        .sum();
    (0..1usize << outputs.len())
        .map(|j| {
            let idx = outputs
                .iter()
                .enumerate()
                .filter(|(s, _)| j >> s & 1 == 1)
                .fold(base, |acc, (_, &node)| acc | 1 << node);
            state.amplitudes()[idx]
        })
        .collect()
}

/// Full-register expectation: the oracle output on the output qubits,
/// tensored with the recorded meter states on the measured ones.
pub fn expected_register(
    run: &RunResult,
    spec: &OracleSpec,
    oracle_out: &[Complex],
) -> Result<StateVector, VerifyError> {
    let n = run.state.num_qubits();
    let base: usize = run
        .outcomes
        .entries()
        .iter()
        .filter(|e| e.1)
        .map(|e| 1usize << e.0)
        .sum();
    let mut amps = vec![Complex::new(0.0, 0.0); 1 << n];
    for (j, &a) in oracle_out.iter().enumerate() {
        let idx = spec
            .outputs
            .iter()
            .enumerate()
            .filter(|(s, _)| j >> s & 1 == 1)
            .fold(base, |acc, (_, &node)| acc | 1 << node);
        amps[idx] = a;
    }
    let mut expected = StateVector::from_amplitudes(n, amps)?;
    for &(q, bit, _) in run.outcomes.entries() {
        expected.mark_collapsed(q, bit)?;
    }
    Ok(expected)
}

/// Compares a finished run with the reference output.
pub fn compare_to_oracle(
    run: &RunResult,
    spec: &OracleSpec,
    oracle_out: &[Complex],
) -> Result<PhaseComparison, VerifyError> {
    let expected = expected_register(run, spec, oracle_out)?;
    Ok(expected.equal_up_to_global_phase(&run.state, FIDELITY_TOLERANCE)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    /// `(qubit, meter reading)` in schedule order.
    pub bits: Vec<(NodeId, bool)>,
    pub step_probabilities: Vec<f64>,
    pub probability: f64,
    pub fidelity: f64,
    /// `<oracle ⊗ meters | run>`.
    pub overlap: Complex,
    /// Output-qubit state after corrections.
    pub output: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub branches: Vec<BranchRecord>,
    pub min_fidelity: f64,
    pub probability_sum: f64,
    pub branch_count: usize,
}

impl BranchReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_fidelity >= 1.0 - tol && (self.probability_sum - 1.0).abs() <= tol
    }

    /// Smallest `|<a|b>|^2` between the output states of any two branches.
    pub fn min_mutual_fidelity(&self) -> f64 {
        let mut min = 1.0f64;
        for (i, a) in self.branches.iter().enumerate() {
            for b in &self.branches[i + 1..] {
                let ov: Complex = a
                    .output
                    .iter()
                    .zip(&b.output)
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                min = min.min(ov.norm_sqr());
            }
        }
        min
    }

    /// Largest deviation of any single step probability from 1/2.
    pub fn max_step_deviation(&self) -> f64 {
        self.branches
            .iter()
            .flat_map(|b| &b.step_probabilities)
            .map(|p| (p - 0.5).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs the pattern under every assignment of meter readings and compares
/// each corrected output with the reference. Branches share their common
/// prefix: the walk is depth-first and forks the register at each step.
pub fn enumerate_branches(
    graph: &ClusterGraph,
    pattern: &MeasurementPattern,
    inputs: &BTreeMap<NodeId, Qubit>,
    spec: &OracleSpec,
) -> Result<BranchReport, VerifyError> {
    let k = pattern.measured_count();
    if k > MAX_ENUMERATED_MEASUREMENTS {
        return Err(VerifyError::TooManyBranches(k));
    }
    graph.validate().map_err(FlowError::InvalidGraph)?;
    pattern
        .check_schedule(graph)
        .map_err(FlowError::InvalidPattern)?;
    let oracle_out = oracle_output(spec)?;

    let mut state = StateVector::init_register(graph.len(), inputs).map_err(FlowError::from)?;
    graph.entangle(&mut state).map_err(FlowError::from)?;

    let mut walk = Walk {
        pattern,
        spec,
        oracle_out: &oracle_out,
        branches: Vec::with_capacity(1 << k),
    };
    walk.descend(state, OutcomeLog::new(), 1.0)?;
    let branches = walk.branches;
    Ok(BranchReport {
        min_fidelity: branches
            .iter()
            .map(|b| b.fidelity)
            .fold(f64::INFINITY, f64::min),
        probability_sum: branches.iter().map(|b| b.probability).sum(),
        branch_count: branches.len(),
        branches,
    })
}

struct Walk<'a> {
    pattern: &'a MeasurementPattern,
    spec: &'a OracleSpec,
    oracle_out: &'a [Complex],
    branches: Vec<BranchRecord>,
}

impl Walk<'_> {
    fn descend(
        &mut self,
        state: StateVector,
        outcomes: OutcomeLog,
        probability: f64,
    ) -> Result<(), VerifyError> {
        let depth = outcomes.len();
        let Some(step) = self.pattern.steps.get(depth) else {
            return self.leaf(state, outcomes, probability);
        };
        for bit in [false, true] {
            let mut st = state.clone();
            let mut log = outcomes.clone();
            let (_, p) = execute_step(&mut st, step, &mut log, MeasurePolicy::Forced(bit))
                .map_err(|e| match e {
                    FlowError::State(source) => FlowError::Step {
                        step: depth,
                        qubit: step.qubit,
                        source,
                    },
                    other => other,
                })?;
            self.descend(st, log, probability * p)?;
        }
        Ok(())
    }

    fn leaf(
        &mut self,
        mut state: StateVector,
        outcomes: OutcomeLog,
        probability: f64,
    ) -> Result<(), VerifyError> {
        apply_output_corrections(&mut state, &self.pattern.corrections, &outcomes)?;
        let run = RunResult {
            outcomes,
            state,
            probability,
            seed: 0,
        };
        let cmp = compare_to_oracle(&run, self.spec, self.oracle_out)?;
        self.branches.push(BranchRecord {
            bits: run.outcomes.entries().iter().map(|e| (e.0, e.1)).collect(),
            step_probabilities: run.outcomes.entries().iter().map(|e| e.2).collect(),
            probability,
            fidelity: cmp.fidelity,
            overlap: cmp.overlap,
            output: output_state(&run, &self.spec.outputs),
        });
        Ok(())
    }
}

/// Enumerates the branches of a compiled circuit.
pub fn enumerate_compiled(c: &CompiledCircuit) -> Result<BranchReport, VerifyError> {
    enumerate_branches(&c.graph, &c.pattern, &c.inputs, &c.oracle)
}

/// Residuals (max entry modulus) of the three deformation identities of the
/// one-step teleportation circuit, first qubit measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationResiduals {
    /// `(HZ_α⊗I)·CZ·(Z⊗I) = (X⊗I)·(HZ_α⊗I)·CZ`
    pub z_to_x: f64,
    /// `(HZ_α⊗I)·CZ·(X⊗I) = (Z⊗Z)·(HZ_{-α}⊗I)·CZ`
    pub x_postponed: f64,
    /// Per meter outcome `s`, `(P_s⊗I)(Z⊗Z) = (-1)^s (P_s⊗Z)`: the `Z` on the
    /// measured qubit only contributes a branch sign, so a `Z` on the
    /// second qubit replaces `Z⊗Z`.
    pub zz_removed: f64,
}

impl DeformationResiduals {
    pub fn max(&self) -> f64 {
        self.z_to_x.max(self.x_postponed).max(self.zz_removed)
    }
}

fn kron2(a: &Matrix2<Complex>, b: &Matrix2<Complex>) -> DMatrix<Complex> {
    to_dense(a).kronecker(&to_dense(b))
}

fn max_abs(m: &DMatrix<Complex>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks the identities on 4x4 matrices; the first tensor factor is the
/// measured qubit.
pub fn check_deformation_identities(alpha: f64) -> DeformationResiduals {
    let i2 = Matrix2::<Complex>::identity();
    let x = Gate::X.matrix2().unwrap();
    let z = Gate::Z.matrix2().unwrap();
    let cz = cz_diag(0, 1, 2);
    let hz_a = kron2(&hz(alpha), &i2);
    let hz_neg = kron2(&hz(-alpha), &i2);

    let lhs1 = &hz_a * &cz * kron2(&z, &i2);
    let rhs1 = kron2(&x, &i2) * &hz_a * &cz;

    let lhs2 = &hz_a * &cz * kron2(&x, &i2);
    let rhs2 = kron2(&z, &z) * &hz_neg * &cz;

    let mut zz_removed = 0.0f64;
    for s in [0usize, 1] {
        let mut p = Matrix2::<Complex>::zeros();
        p[(s, s)] = Complex::new(1.0, 0.0);
        let sign = if s == 1 { -1.0 } else { 1.0 };
        // meter on the measured qubit after the deformed circuit
        let with_zz = kron2(&p, &i2) * kron2(&z, &z) * &hz_neg * &cz;
        let with_z = kron2(&p, &z) * &hz_neg * &cz * Complex::new(sign, 0.0);
        zz_removed = zz_removed.max(max_abs(&(&with_zz - &with_z)));
        // and the same branch taken from the undeformed circuit
        zz_removed = zz_removed.max(max_abs(&(kron2(&p, &i2) * &lhs2 - &with_z)));
    }

    DeformationResiduals {
        z_to_x: max_abs(&(lhs1 - rhs1)),
        x_postponed: max_abs(&(lhs2 - rhs2)),
        zz_removed,
    }
}

/// `ZX = -XZ`, and a state compared with its negation is equal with
/// fidelity 1.
pub fn anticommutation_sign_check() -> bool {
    let x = Gate::X.matrix2().unwrap();
    let z = Gate::Z.matrix2().unwrap();
    let anti = z * x + x * z;
    let anti_ok = anti.iter().all(|e| e.norm() < 1e-15);
    let psi = Qubit::new(Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
    let neg = Qubit::new(-psi.zero, -psi.one);
    let mk = |q| StateVector::init_register(1, &BTreeMap::from([(0, q)]));
    let phase_ok = match (mk(psi), mk(neg)) {
        (Ok(a), Ok(b)) => a
            .equal_up_to_global_phase(&b, FIDELITY_TOLERANCE)
            .map(|c| {
                c.equal && (c.fidelity - 1.0).abs() < 1e-12 && (c.overlap + 1.0).norm() < 1e-12
            })
            .unwrap_or(false),
        _ => false,
    };
    anti_ok && phase_ok
}

/// Circuit-level fixtures shared by the suites.
pub mod fixtures {
    use super::*;

    fn named(inputs: &[Qubit]) -> LogicalCircuit {
        LogicalCircuit::new(
            inputs
                .iter()
                .enumerate()
                .map(|(i, &q)| (format!("w{i}"), q)),
        )
    }

    /// One teleportation step.
    pub fn single_teleport(alpha: f64, input: Qubit) -> LogicalCircuit {
        named(&[input]).rot(0, alpha)
    }

    /// A four-qubit chain with three measured stages.
    pub fn three_stage_chain(angles: [f64; 3], input: Qubit) -> LogicalCircuit {
        named(&[input])
            .rot(0, angles[0])
            .rot(0, angles[1])
            .rot(0, angles[2])
    }

    /// Two wires, one rotation each, joined by a measured junction pair.
    pub fn minimal_h_branch(
        rot: (f64, f64),
        junction: (f64, f64),
        inputs: (Qubit, Qubit),
    ) -> LogicalCircuit {
        named(&[inputs.0, inputs.1])
            .rot(0, rot.0)
            .rot(1, rot.1)
            .junction(0, 1, Some(junction))
    }

    /// Three wires; the middle one takes part in two junctions.
    pub fn composed_h_branches(angles: [f64; 9], inputs: [Qubit; 3]) -> LogicalCircuit {
        named(&inputs)
            .rot(0, angles[0])
            .rot(1, angles[1])
            .rot(2, angles[2])
            .junction(0, 1, Some((angles[3], angles[4])))
            .rot(1, angles[5])
            .junction(1, 2, Some((angles[6], angles[7])))
            .rot(2, angles[8])
    }

    /// A three-stage chain realizing `u` up to global phase.
    pub fn chain_for_unitary(
        u: &Matrix2<Complex>,
        input: Qubit,
    ) -> Result<LogicalCircuit, CompileError> {
        Ok(three_stage_chain(chain_angles(u)?, input))
    }
}

/// Summary of one property suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub checks: usize,
    pub failures: Vec<String>,
    /// Worst observed value of the suite's key metric.
    pub worst: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Deformation identities at `trials` random angles plus 0 and 0.7.
pub fn identity_suite(trials: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles = vec![0.0, 0.7];
    angles.extend((0..trials).map(|_| random::angle(&mut rng)));
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for &a in &angles {
        let r = check_deformation_identities(a);
        worst = worst.max(r.max());
        if r.max() > IDENTITY_TOLERANCE {
            failures.push(format!("alpha={a}: residuals {r:?}"));
        }
    }
    if !anticommutation_sign_check() {
        failures.push("ZX != -XZ or phase comparison not sign-blind".into());
    }
    SuiteOutcome {
        name: "identities",
        trials: angles.len(),
        checks: angles.len() * 3 + 1,
        failures,
        worst,
    }
}

/// Every step of every branch of random compiled circuits has probability
/// 1/2, and every branch matches the reference.
pub fn uniformity_suite(trials: usize, seed: u64) -> Result<SuiteOutcome, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for t in 0..trials {
        let circuit = random::circuit(&mut rng, 3, 6, 10);
        let c = compile(&circuit)?;
        let report = enumerate_compiled(&c)?;
        let dev = report.max_step_deviation();
        worst = worst.max(dev);
        checks += report
            .branches
            .iter()
            .map(|b| b.step_probabilities.len())
            .sum::<usize>();
        if dev > FIDELITY_TOLERANCE {
            failures.push(format!("trial {t}: step probability off 1/2 by {dev:e}"));
        }
        if !report.passes(FIDELITY_TOLERANCE) {
            failures.push(format!(
                "trial {t}: min fidelity {} probability sum {}",
                report.min_fidelity, report.probability_sum
            ));
        }
    }
    Ok(SuiteOutcome {
        name: "uniformity",
        trials,
        checks,
        failures,
        worst,
    })
}

/// Mutual fidelity below which an ablated pattern counts as broken.
pub const ABLATION_THRESHOLD: f64 = 0.99;

/// Probe inputs for ablation besides the circuit's own: `|0⟩`, `|+⟩` and
/// `|+i⟩` on every wire. Their Bloch vectors are orthogonal, so a leftover
/// rotation error by `θ` costs at least one of them fidelity
/// `(2/3)·sin²(θ/2)` whatever the circuit does before the error.
pub fn ablation_probes(c: &CompiledCircuit) -> Vec<(BTreeMap<NodeId, Qubit>, OracleSpec)> {
    let plus_i = Qubit::new(
        Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
    );
    let mut probes = vec![(c.inputs.clone(), c.oracle.clone())];
    for q in [Qubit::zero(), Qubit::plus(), plus_i] {
        let inputs = c.inputs.keys().map(|&n| (n, q)).collect();
        let mut spec = c.oracle.clone();
        spec.inputs = vec![q; spec.inputs.len()];
        probes.push((inputs, spec));
    }
    probes
}

/// Removes each dependency of a compiled circuit in turn and returns the
/// removals that did not break determinism on any probe input (see
/// [`ablation_probes`]), with the worst (largest) min-mutual-fidelity seen.
pub fn ablate(c: &CompiledCircuit) -> Result<(Vec<String>, f64), VerifyError> {
    let probes = ablation_probes(c);
    let mut undetected = Vec::new();
    let mut worst = 0.0f64;
    for dep in c.pattern.dependency_refs() {
        let ablated = c.pattern.without(dep);
        let mut m = f64::INFINITY;
        for (inputs, spec) in &probes {
            let report = enumerate_branches(&c.graph, &ablated, inputs, spec)?;
            m = m.min(report.min_mutual_fidelity());
        }
        worst = worst.max(m);
        if m >= ABLATION_THRESHOLD {
            undetected.push(format!("{dep}: min mutual fidelity {m}"));
        }
    }
    Ok((undetected, worst))
}

/// Ablation over random three-stage chains and minimal H-branches at
/// generic angles.
pub fn ablation_suite(trials: usize, seed: u64) -> Result<SuiteOutcome, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for t in 0..trials {
        let chain = fixtures::three_stage_chain(
            [
                random::generic_angle(&mut rng),
                random::generic_angle(&mut rng),
                random::generic_angle(&mut rng),
            ],
            random::qubit(&mut rng),
        );
        let branch = fixtures::minimal_h_branch(
            (
                random::generic_angle(&mut rng),
                random::generic_angle(&mut rng),
            ),
            (
                random::generic_angle(&mut rng),
                random::generic_angle(&mut rng),
            ),
            (random::qubit(&mut rng), random::qubit(&mut rng)),
        );
        for (label, circuit) in [("chain", chain), ("h-branch", branch)] {
            let c = compile(&circuit)?;
            checks += c.pattern.dependency_refs().len();
            let (undetected, w) = ablate(&c)?;
            worst = worst.max(w);
            failures.extend(
                undetected
                    .into_iter()
                    .map(|u| format!("trial {t} {label}: {u}")),
            );
        }
    }
    Ok(SuiteOutcome {
        name: "ablation",
        trials,
        checks,
        failures,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(num_wires: usize, ops: Vec<OracleOp>) -> OracleSpec {
        OracleSpec {
            num_wires,
            ops,
            inputs: vec![Qubit::zero(); num_wires],
            outputs: (0..num_wires).collect(),
        }
    }

    fn close(a: &DMatrix<Complex>, b: &DMatrix<Complex>) -> bool {
        max_abs(&(a - b)) < 1e-12
    }

    #[test]
    fn oracle_single_rot_zero_is_h() {
        let u = oracle_unitary(&spec(
            1,
            vec![OracleOp::Rot {
                slot: 0,
                alpha: 0.0,
            }],
        ))
        .unwrap();
        assert!(close(&u, &Gate::H.matrix()));
    }

    #[test]
    fn oracle_three_quarter_turns_is_minus_i() {
        let ops = vec![
            OracleOp::Rot {
                slot: 0,
                alpha: FRAC_PI_2
            };
            3
        ];
        let u = oracle_unitary(&spec(1, ops)).unwrap();
        let want = DMatrix::<Complex>::identity(2, 2) * Complex::new(0.0, -1.0);
        assert!(close(&u, &want));
    }

    #[test]
    fn oracle_h_branch_structure() {
        let (a1, a2, b1, b2) = (0.3, -1.2, 2.0, 0.9);
        let ops = vec![
            OracleOp::Rot { slot: 0, alpha: a1 },
            OracleOp::Rot { slot: 1, alpha: a2 },
            OracleOp::Junction {
                slots: (0, 1),
                angles: Some((b1, b2)),
            },
        ];
        let u = oracle_unitary(&spec(2, ops)).unwrap();
        // slot 1 is the high kron factor
        let want = kron2(&hz(b2), &hz(b1)) * cz_diag(0, 1, 2) * kron2(&hz(a2), &hz(a1));
        assert!(close(&u, &want));
    }

    #[test]
    fn oracle_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let circuit = random::circuit(&mut rng, 4, 8, 14);
            let c = compile(&circuit).unwrap();
            let u = oracle_unitary(&c.oracle).unwrap();
            let input = DVector::from_vec(oracle_input(&c.oracle).unwrap());
            let via_matrix = u * input;
            let direct = oracle_output(&c.oracle).unwrap();
            for (a, b) in via_matrix.iter().zip(&direct) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_limits() {
        assert_eq!(
            oracle_unitary(&spec(13, vec![])),
            Err(VerifyError::OracleTooLarge(13))
        );
        assert_eq!(
            oracle_unitary(&spec(
                1,
                vec![OracleOp::Rot {
                    slot: 2,
                    alpha: 0.0
                }]
            )),
            Err(VerifyError::BadSlot {
                slot: 2,
                num_wires: 1
            })
        );
    }

    #[test]
    fn enumeration_bound() {
        let mut circuit = fixtures::single_teleport(0.0, Qubit::zero());
        for _ in 0..20 {
            circuit = circuit.rot(0, 0.1);
        }
        let c = compile(&circuit).unwrap();
        assert_eq!(
            enumerate_compiled(&c).unwrap_err(),
            VerifyError::TooManyBranches(21)
        );
    }

    #[test]
    fn deformation_identities_hold() {
        for a in [0.0, 0.7, -2.9, 3.1] {
            let r = check_deformation_identities(a);
            assert!(r.max() <= IDENTITY_TOLERANCE, "{a}: {r:?}");
        }
    }

    #[test]
    fn anticommutation() {
        assert!(anticommutation_sign_check());
    }

    #[test]
    fn single_teleport_enumeration() {
        let input = Qubit::new(Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
        let c = compile(&fixtures::single_teleport(0.4, input)).unwrap();
        let r = enumerate_compiled(&c).unwrap();
        assert_eq!(r.branch_count, 2);
        for b in &r.branches {
            assert!((b.probability - 0.5).abs() < 1e-9);
            assert!(b.fidelity >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn output_state_matches_oracle_on_chain() {
        let input = Qubit::new(Complex::new(0.0, 0.6), Complex::new(0.8, 0.0));
        let c = compile(&fixtures::three_stage_chain([0.7, 1.1, 2.3], input)).unwrap();
        let r = enumerate_compiled(&c).unwrap();
        assert_eq!(r.branch_count, 8);
        assert!(r.min_mutual_fidelity() > 1.0 - 1e-9);
    }

    #[test]
    fn small_suites_pass() {
        assert!(identity_suite(10, 1).passed());
        assert!(uniformity_suite(3, 1).unwrap().passed());
    }
}
