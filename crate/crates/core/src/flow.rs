//! Classical signal-flow engine.
//!
//! Every measured qubit `n` is rotated by `Zrot(±α)`, hit with `H`, and read
//! in the computational basis. Earlier meter readings feed forward through
//! three channels:
//!
//! | control            | `n` measured          | `n` is an output |
//! |--------------------|-----------------------|------------------|
//! | `n-2` on the wire  | `X` before the meter  | `Z`              |
//! | `n-1` on the wire  | `α -> -α`             | `X`              |
//! | partner's `m-1`    | `X` before the meter  | `Z` (junction outputs only) |
//!
//! The bit that flows forward is always the meter reading taken after the
//! pre-meter `X`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cluster::{ClusterError, ClusterGraph, Diagnostic, NodeId};
use crate::statevector::{Gate, MeasurePolicy, Qubit, StateError, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("outcome of q{0} is needed but has not been recorded")]
    MissingOutcome(NodeId),
    #[error("step {step} (q{qubit}): {source}")]
    Step {
        step: usize,
        qubit: NodeId,
        #[source]
        source: StateError,
    },
    #[error("invalid cluster graph: {}", join(.0))]
    InvalidGraph(Vec<Diagnostic>),
    #[error("pattern does not fit the graph: {}", join(.0))]
    InvalidPattern(Vec<PatternViolation>),
    #[error("forced outcome list has {got} bits for {expected} steps")]
    ForcedLength { expected: usize, got: usize },
    #[error("schedule is not a permutation of the steps")]
    BadSchedule,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    State(#[from] StateError),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Wraps an angle into `(-π, π]`.
pub fn canonical_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStep {
    pub qubit: NodeId,
    pub base_angle: f64,
    /// Outcomes whose parity negates the angle.
    pub sign_deps: BTreeSet<NodeId>,
    /// Outcomes whose parity applies `X` just before the meter.
    pub flip_deps: BTreeSet<NodeId>,
}

impl MeasurementStep {
    pub fn new(qubit: NodeId, base_angle: f64) -> Self {
        Self {
            qubit,
            base_angle,
            sign_deps: BTreeSet::new(),
            flip_deps: BTreeSet::new(),
        }
    }

    /// `(-1)^(parity of sign deps) · α`, wrapped into `(-π, π]`.
    pub fn effective_angle(&self, outcomes: &OutcomeLog) -> Result<f64, FlowError> {
        let s = outcomes.parity(&self.sign_deps)?;
        Ok(canonical_angle(if s {
            -self.base_angle
        } else {
            self.base_angle
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputCorrection {
    pub qubit: NodeId,
    pub x_deps: BTreeSet<NodeId>,
    pub z_deps: BTreeSet<NodeId>,
}

/// Recorded meter readings with their branch probabilities, in schedule order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeLog {
    entries: Vec<(NodeId, bool, f64)>,
    index: BTreeMap<NodeId, usize>,
}

impl OutcomeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, qubit: NodeId, bit: bool, probability: f64) {
        self.index.insert(qubit, self.entries.len());
        self.entries.push((qubit, bit, probability));
    }

    pub fn get(&self, qubit: NodeId) -> Option<bool> {
        self.index.get(&qubit).map(|&i| self.entries[i].1)
    }

    /// `(qubit, bit, probability)` in the order recorded.
    pub fn entries(&self) -> &[(NodeId, bool, f64)] {
        &self.entries
    }

    pub fn bits(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// XOR of the recorded outcomes of `deps`.
    pub fn parity(&self, deps: &BTreeSet<NodeId>) -> Result<bool, FlowError> {
        deps.iter().try_fold(false, |acc, &d| {
            self.get(d)
                .map(|b| acc ^ b)
                .ok_or(FlowError::MissingOutcome(d))
        })
    }
}

/// How `execute` chooses outcomes.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomePolicy {
    /// Born-rule sampling from a generator seeded with the run's seed.
    Sample,
    /// One meter reading per step, in schedule order.
    Forced(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcomes: OutcomeLog,
    pub state: StateVector,
    pub probability: f64,
    pub seed: u64,
}

/// A single reference from a dependency set, used for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DependencyRef {
    Sign { step: usize, source: NodeId },
    Flip { step: usize, source: NodeId },
    CorrectionX { correction: usize, source: NodeId },
    CorrectionZ { correction: usize, source: NodeId },
}

impl fmt::Display for DependencyRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependencyRef::Sign { step, source } => write!(f, "sign dep q{source} of step {step}"),
            DependencyRef::Flip { step, source } => write!(f, "flip dep q{source} of step {step}"),
            DependencyRef::CorrectionX { correction, source } => {
                write!(f, "X dep q{source} of correction {correction}")
            }
            DependencyRef::CorrectionZ { correction, source } => {
                write!(f, "Z dep q{source} of correction {correction}")
            }
        }
    }
}

/// A structural defect of a pattern relative to its graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternViolation {
    UnknownQubit(NodeId),
    MeasuredTwice(NodeId),
    OutputMeasured(NodeId),
    Unaccounted(NodeId),
    MissingCorrection(NodeId),
    NotMeasuredBefore {
        qubit: NodeId,
        dependency: NodeId,
    },
    NonLocal {
        dependency: DependencyKind,
        qubit: NodeId,
        source: NodeId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependencyKind {
    Sign,
    Flip,
    X,
    Z,
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DependencyKind::Sign => "sign",
            DependencyKind::Flip => "flip",
            DependencyKind::X => "X",
            DependencyKind::Z => "Z",
        })
    }
}

impl fmt::Display for PatternViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternViolation::UnknownQubit(q) => write!(f, "q{q} is not a graph node"),
            PatternViolation::MeasuredTwice(q) => write!(f, "q{q} is measured more than once"),
            PatternViolation::OutputMeasured(q) => write!(f, "output q{q} is measured"),
            PatternViolation::Unaccounted(q) => write!(f, "q{q} is neither measured nor an output"),
            PatternViolation::MissingCorrection(q) => {
                write!(f, "output q{q} has no correction entry")
            }
            PatternViolation::NotMeasuredBefore { qubit, dependency } => {
                write!(
                    f,
                    "q{qubit} depends on q{dependency}, which is not measured earlier"
                )
            }
            PatternViolation::NonLocal {
                dependency,
                qubit,
                source,
            } => {
                write!(
                    f,
                    "{dependency} dependency q{source} -> q{qubit} breaks locality"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementPattern {
    pub steps: Vec<MeasurementStep>,
    pub corrections: Vec<OutputCorrection>,
}

impl MeasurementPattern {
    pub fn measured_count(&self) -> usize {
        self.steps.len()
    }

    /// Every single dependency reference in the pattern.
    pub fn dependency_refs(&self) -> Vec<DependencyRef> {
        let mut refs = Vec::new();
        for (step, s) in self.steps.iter().enumerate() {
            refs.extend(
                s.sign_deps
                    .iter()
                    .map(|&source| DependencyRef::Sign { step, source }),
            );
            refs.extend(
                s.flip_deps
                    .iter()
                    .map(|&source| DependencyRef::Flip { step, source }),
            );
        }
        for (correction, c) in self.corrections.iter().enumerate() {
            refs.extend(
                c.x_deps
                    .iter()
                    .map(|&source| DependencyRef::CorrectionX { correction, source }),
            );
            refs.extend(
                c.z_deps
                    .iter()
                    .map(|&source| DependencyRef::CorrectionZ { correction, source }),
            );
        }
        refs
    }

    /// A copy with one dependency reference removed.
    pub fn without(&self, dep: DependencyRef) -> Self {
        let mut p = self.clone();
        match dep {
            DependencyRef::Sign { step, source } => p.steps[step].sign_deps.remove(&source),
            DependencyRef::Flip { step, source } => p.steps[step].flip_deps.remove(&source),
            DependencyRef::CorrectionX { correction, source } => {
                p.corrections[correction].x_deps.remove(&source)
            }
            DependencyRef::CorrectionZ { correction, source } => {
                p.corrections[correction].z_deps.remove(&source)
            }
        };
        p
    }

    /// A copy with every dependency set emptied.
    pub fn without_feedforward(&self) -> Self {
        let mut p = self.clone();
        for s in &mut p.steps {
            s.sign_deps.clear();
            s.flip_deps.clear();
        }
        for c in &mut p.corrections {
            c.x_deps.clear();
            c.z_deps.clear();
        }
        p
    }

    /// The same steps run in another order. `order[i]` is the index of the
    /// step to run `i`-th.
    pub fn reordered(&self, order: &[usize]) -> Result<Self, FlowError> {
        let mut seen = vec![false; self.steps.len()];
        if order.len() != self.steps.len() {
            return Err(FlowError::BadSchedule);
        }
        for &i in order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(FlowError::BadSchedule);
            }
        }
        Ok(Self {
            steps: order.iter().map(|&i| self.steps[i].clone()).collect(),
            corrections: self.corrections.clone(),
        })
    }

    /// A dependency-respecting order that, among ready steps, always picks
    /// the one latest in the current schedule.
    pub fn alternative_schedule(&self) -> Vec<usize> {
        let position: BTreeMap<NodeId, usize> = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| (s.qubit, i))
            .collect();
        let deps: Vec<BTreeSet<usize>> = self
            .steps
            .iter()
            .map(|s| {
                s.sign_deps
                    .iter()
                    .chain(&s.flip_deps)
                    .filter_map(|d| position.get(d).copied())
                    .collect()
            })
            .collect();
        let mut done = vec![false; self.steps.len()];
        let mut order = Vec::with_capacity(self.steps.len());
        while order.len() < self.steps.len() {
            let Some(next) = (0..self.steps.len())
                .rev()
                .find(|&i| !done[i] && deps[i].iter().all(|&d| done[d]))
            else {
                break;
            };
            done[next] = true;
            order.push(next);
        }
        order
    }

    /// Schedule and bookkeeping checks: every node is measured exactly once
    /// or is an output with a correction entry, and dependencies refer only
    /// to qubits measured earlier.
    pub fn check_schedule(&self, graph: &ClusterGraph) -> Result<(), Vec<PatternViolation>> {
        let mut v = Vec::new();
        let mut measured = BTreeSet::new();
        for step in &self.steps {
            if graph.node(step.qubit).is_none() {
                v.push(PatternViolation::UnknownQubit(step.qubit));
                continue;
            }
            if graph.is_output(step.qubit) {
                v.push(PatternViolation::OutputMeasured(step.qubit));
            }
            for &d in step.sign_deps.iter().chain(&step.flip_deps) {
                if !measured.contains(&d) {
                    v.push(PatternViolation::NotMeasuredBefore {
                        qubit: step.qubit,
                        dependency: d,
                    });
                }
            }
            if !measured.insert(step.qubit) {
                v.push(PatternViolation::MeasuredTwice(step.qubit));
            }
        }
        for c in &self.corrections {
            for &d in c.x_deps.iter().chain(&c.z_deps) {
                if !measured.contains(&d) {
                    v.push(PatternViolation::NotMeasuredBefore {
                        qubit: c.qubit,
                        dependency: d,
                    });
                }
            }
        }
        for node in graph.nodes() {
            let is_out = graph.is_output(node.id);
            if !is_out && !measured.contains(&node.id) {
                v.push(PatternViolation::Unaccounted(node.id));
            }
            if is_out && !self.corrections.iter().any(|c| c.qubit == node.id) {
                v.push(PatternViolation::MissingCorrection(node.id));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// A measurement outcome may only reach the next two qubits on its own
    /// wire, and across a junction only the partner of its chain successor.
    pub fn check_locality(&self, graph: &ClusterGraph) -> Result<(), Vec<PatternViolation>> {
        let pred = |n: NodeId| graph.predecessor(n);
        let pred2 = |n: NodeId| graph.predecessor(n).and_then(|p| graph.predecessor(p));
        let cross = |n: NodeId| graph.partner(n).and_then(|m| graph.predecessor(m));
        let mut v = Vec::new();
        let mut check = |kind: DependencyKind,
                         qubit: NodeId,
                         deps: &BTreeSet<NodeId>,
                         allowed: &[Option<NodeId>]| {
            for &source in deps {
                if !allowed.contains(&Some(source)) {
                    v.push(PatternViolation::NonLocal {
                        dependency: kind,
                        qubit,
                        source,
                    });
                }
            }
        };
        for s in &self.steps {
            let n = s.qubit;
            check(DependencyKind::Sign, n, &s.sign_deps, &[pred(n)]);
            check(DependencyKind::Flip, n, &s.flip_deps, &[pred2(n), cross(n)]);
        }
        for c in &self.corrections {
            let n = c.qubit;
            check(DependencyKind::X, n, &c.x_deps, &[pred(n)]);
            check(DependencyKind::Z, n, &c.z_deps, &[pred2(n), cross(n)]);
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

/// Rotates, optionally flips, and measures one qubit, recording the meter
/// reading in `outcomes`.
pub fn execute_step(
    state: &mut StateVector,
    step: &MeasurementStep,
    outcomes: &mut OutcomeLog,
    policy: MeasurePolicy<'_>,
) -> Result<(bool, f64), FlowError> {
    let theta = step.effective_angle(outcomes)?;
    let flip = outcomes.parity(&step.flip_deps)?;
    let q = step.qubit;
    state.apply_gate(Gate::Zrot(theta), &[q])?;
    state.apply_gate(Gate::H, &[q])?;
    if flip {
        state.apply_gate(Gate::X, &[q])?;
    }
    let (bit, p) = state.measure_z(q, policy)?;
    outcomes.record(q, bit, p);
    Ok((bit, p))
}

/// Applies `Z^(z parity)` then `X^(x parity)` to each output.
pub fn apply_output_corrections(
    state: &mut StateVector,
    corrections: &[OutputCorrection],
    outcomes: &OutcomeLog,
) -> Result<(), FlowError> {
    for c in corrections {
        if outcomes.parity(&c.z_deps)? {
            state.apply_gate(Gate::Z, &[c.qubit])?;
        }
        if outcomes.parity(&c.x_deps)? {
            state.apply_gate(Gate::X, &[c.qubit])?;
        }
    }
    Ok(())
}

/// Prepares the cluster, runs every step in schedule order, and corrects
/// the outputs.
pub fn execute(
    graph: &ClusterGraph,
    pattern: &MeasurementPattern,
    inputs: &BTreeMap<NodeId, Qubit>,
    policy: &OutcomePolicy,
    seed: u64,
) -> Result<RunResult, FlowError> {
    graph.validate().map_err(FlowError::InvalidGraph)?;
    pattern
        .check_schedule(graph)
        .map_err(FlowError::InvalidPattern)?;
    if let OutcomePolicy::Forced(bits) = policy {
        if bits.len() != pattern.steps.len() {
            return Err(FlowError::ForcedLength {
                expected: pattern.steps.len(),
                got: bits.len(),
            });
        }
    }

    let mut state = StateVector::init_register(graph.len(), inputs)?;
    graph.entangle(&mut state)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = OutcomeLog::new();
    let mut probability = 1.0;
    for (i, step) in pattern.steps.iter().enumerate() {
        let meter = match policy {
            OutcomePolicy::Sample => MeasurePolicy::Sample(&mut rng),
            OutcomePolicy::Forced(bits) => MeasurePolicy::Forced(bits[i]),
        };
        let (_, p) = execute_step(&mut state, step, &mut outcomes, meter).map_err(|e| match e {
            FlowError::State(source) => FlowError::Step {
                step: i,
                qubit: step.qubit,
                source,
            },
            other => other,
        })?;
        probability *= p;
    }
    apply_output_corrections(&mut state, &pattern.corrections, &outcomes)?;

    Ok(RunResult {
        outcomes,
        state,
        probability,
        seed,
    })
}
