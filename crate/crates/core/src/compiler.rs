//! Logical circuits to measurement patterns.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::cluster::{ClusterError, ClusterGraph, NodeId, WireId};
use crate::flow::{canonical_angle, MeasurementPattern, MeasurementStep, OutputCorrection};
use crate::statevector::{Complex, Gate, Qubit};
use crate::verify::{OracleOp, OracleSpec};

/// Default unitarity tolerance for decomposition inputs.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Below this `sin(b/2)` or `cos(b/2)` the Euler angles are degenerate.
const GIMBAL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub name: String,
    pub input: Qubit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogicalOp {
    /// `H·Zrot(alpha)` on one wire.
    Rot { wire: usize, alpha: f64 },
    /// Controlled-phase between two wires, followed by `H·Zrot` on each when
    /// angles are given. Without angles it must be the last op on both wires.
    Junction {
        wires: (usize, usize),
        angles: Option<(f64, f64)>,
    },
}

impl LogicalOp {
    fn touches(&self, w: usize) -> bool {
        match *self {
            LogicalOp::Rot { wire, .. } => wire == w,
            LogicalOp::Junction { wires: (a, b), .. } => a == w || b == w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogicalCircuit {
    pub wires: Vec<Wire>,
    pub ops: Vec<LogicalOp>,
}

impl LogicalCircuit {
    /// A circuit with the given wire names and inputs and no ops.
    pub fn new(wires: impl IntoIterator<Item = (String, Qubit)>) -> Self {
        Self {
            wires: wires
                .into_iter()
                .map(|(name, input)| Wire { name, input })
                .collect(),
            ops: Vec::new(),
        }
    }

    pub fn rot(mut self, wire: usize, alpha: f64) -> Self {
        self.ops.push(LogicalOp::Rot { wire, alpha });
        self
    }

    pub fn junction(mut self, a: usize, b: usize, angles: Option<(f64, f64)>) -> Self {
        self.ops.push(LogicalOp::Junction {
            wires: (a, b),
            angles,
        });
        self
    }

    /// Checks wire references, angle finiteness, junction spacing and the
    /// placement of angle-less junctions.
    pub fn check(&self) -> Result<(), CompileError> {
        if self.wires.is_empty() {
            return Err(CompileError::NoWires);
        }
        for (i, w) in self.wires.iter().enumerate() {
            if self.wires[..i].iter().any(|o| o.name == w.name) {
                return Err(CompileError::DuplicateWire(w.name.clone()));
            }
        }
        let n = self.wires.len();
        let mut last_junction: Vec<Option<usize>> = vec![None; n];
        let mut closed_by: Vec<Option<usize>> = vec![None; n];
        for (op_index, op) in self.ops.iter().enumerate() {
            let (touched, finite) = match *op {
                LogicalOp::Rot { wire, alpha } => (vec![wire], alpha.is_finite()),
                LogicalOp::Junction {
                    wires: (a, b),
                    angles,
                } => {
                    if a == b && a < n {
                        return Err(CompileError::JunctionSameWire {
                            op: op_index,
                            wire: self.wires[a].name.clone(),
                        });
                    }
                    (
                        vec![a, b],
                        angles.is_none_or(|(x, y)| x.is_finite() && y.is_finite()),
                    )
                }
            };
            if !finite {
                return Err(CompileError::NonFiniteAngle { op: op_index });
            }
            for &w in &touched {
                if w >= n {
                    return Err(CompileError::UnknownWire {
                        op: op_index,
                        wire: w,
                    });
                }
                if let Some(cz_op) = closed_by[w] {
                    return Err(CompileError::NonTerminalCz {
                        cz_op,
                        later_op: op_index,
                        wire: self.wires[w].name.clone(),
                    });
                }
            }
            match *op {
                LogicalOp::Rot { wire, .. } => last_junction[wire] = None,
                LogicalOp::Junction { angles, .. } => {
                    for &w in &touched {
                        if let Some(first) = last_junction[w] {
                            return Err(CompileError::JunctionSpacing {
                                wire: self.wires[w].name.clone(),
                                first,
                                second: op_index,
                            });
                        }
                        last_junction[w] = Some(op_index);
                        if angles.is_none() {
                            closed_by[w] = Some(op_index);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("circuit has no wires")]
    NoWires,
    #[error("wire `{0}` is declared twice")]
    DuplicateWire(String),
    #[error("op {op} refers to unknown wire index {wire}")]
    UnknownWire { op: usize, wire: usize },
    #[error("op {op} joins wire `{wire}` to itself")]
    JunctionSameWire { op: usize, wire: String },
    #[error("op {op} has a non-finite angle")]
    NonFiniteAngle { op: usize },
    #[error("junction ops {first} and {second} on wire `{wire}` need at least one rotation between them")]
    JunctionSpacing {
        wire: String,
        first: usize,
        second: usize,
    },
    #[error("op {later_op} uses wire `{wire}` after the terminal junction op {cz_op}")]
    NonTerminalCz {
        cz_op: usize,
        later_op: usize,
        wire: String,
    },
    #[error("matrix is not unitary: max |U†U - I| entry is {deviation:e}")]
    NotUnitary { deviation: f64 },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// A compiled circuit: cluster, signal-flow pattern and reference circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    pub graph: ClusterGraph,
    pub pattern: MeasurementPattern,
    pub oracle: OracleSpec,
    /// Input state per wire, keyed by the wire's input node.
    pub inputs: BTreeMap<NodeId, Qubit>,
}

pub fn compile(circuit: &LogicalCircuit) -> Result<CompiledCircuit, CompileError> {
    circuit.check()?;

    let num_wires = circuit.wires.len();
    let lengths: Vec<usize> = (0..num_wires)
        .map(|w| {
            1 + circuit
                .ops
                .iter()
                .filter(|op| op.touches(w))
                .filter(|op| !matches!(op, LogicalOp::Junction { angles: None, .. }))
                .count()
        })
        .collect();

    let mut graph = ClusterGraph::new();
    for &len in &lengths {
        graph.add_wire(len)?;
    }
    let mut front: Vec<usize> = vec![0; num_wires];
    let node_at = |g: &ClusterGraph, w: usize, pos: usize| g.wire_nodes(WireId(w))[pos];

    let mut steps = Vec::new();
    let mut oracle_ops = Vec::new();
    for op in &circuit.ops {
        match *op {
            LogicalOp::Rot { wire, alpha } => {
                steps.push(MeasurementStep::new(
                    node_at(&graph, wire, front[wire]),
                    alpha,
                ));
                front[wire] += 1;
                oracle_ops.push(OracleOp::Rot { slot: wire, alpha });
            }
            LogicalOp::Junction {
                wires: (a, b),
                angles,
            } => {
                let (na, nb) = (node_at(&graph, a, front[a]), node_at(&graph, b, front[b]));
                graph.add_junction(na, nb)?;
                if let Some((alpha_a, alpha_b)) = angles {
                    steps.push(MeasurementStep::new(na, alpha_a));
                    steps.push(MeasurementStep::new(nb, alpha_b));
                    front[a] += 1;
                    front[b] += 1;
                }
                oracle_ops.push(OracleOp::Junction {
                    slots: (a, b),
                    angles,
                });
            }
        }
    }

    let pred = |n: NodeId| graph.predecessor(n);
    let pred2 = |n: NodeId| pred(n).and_then(pred);
    let cross = |n: NodeId| graph.partner(n).and_then(pred);
    for step in &mut steps {
        let n = step.qubit;
        step.sign_deps.extend(pred(n));
        step.flip_deps.extend(pred2(n));
        step.flip_deps.extend(cross(n));
    }
    let outputs = graph.outputs();
    let corrections = outputs
        .iter()
        .map(|&n| {
            let mut c = OutputCorrection {
                qubit: n,
                ..Default::default()
            };
            c.x_deps.extend(pred(n));
            c.z_deps.extend(pred2(n));
            // only an output that is itself a junction qubit sees its partner
            c.z_deps.extend(cross(n));
            c
        })
        .collect();

    let inputs = circuit
        .wires
        .iter()
        .enumerate()
        .map(|(w, wire)| (node_at(&graph, w, 0), wire.input))
        .collect();
    let oracle = OracleSpec {
        num_wires,
        ops: oracle_ops,
        inputs: circuit.wires.iter().map(|w| w.input).collect(),
        outputs,
    };
    Ok(CompiledCircuit {
        graph,
        pattern: MeasurementPattern { steps, corrections },
        oracle,
        inputs,
    })
}

/// `U = e^{i·global_phase} · Zrot(a) · Xrot(b) · Zrot(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryDecomposition {
    pub global_phase: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl UnitaryDecomposition {
    pub fn matrix(&self) -> Matrix2<Complex> {
        let z = |t: f64| Gate::Zrot(t).matrix2().unwrap();
        let x = Gate::Xrot(self.b).matrix2().unwrap();
        z(self.a) * x * z(self.c) * Complex::from_polar(1.0, self.global_phase)
    }

    /// Largest entry modulus of `matrix() - u`.
    pub fn reconstruction_error(&self, u: &Matrix2<Complex>) -> f64 {
        max_entry(&(self.matrix() - u))
    }
}

pub(crate) fn max_entry(m: &Matrix2<Complex>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry modulus of `U†U - I`.
pub fn unitarity_deviation(u: &Matrix2<Complex>) -> f64 {
    max_entry(&(u.adjoint() * u - Matrix2::identity()))
}

pub fn euler_decompose(u: &Matrix2<Complex>) -> Result<UnitaryDecomposition, CompileError> {
    euler_decompose_within(u, UNITARY_TOLERANCE)
}

/// Z-X-Z Euler angles with `a, c, phase ∈ (-π, π]` and `b ∈ [0, π]`. When
/// `b` is 0 or π the split between `a` and `c` is arbitrary; `c` is fixed
/// to 0 then.
pub fn euler_decompose_within(
    u: &Matrix2<Complex>,
    tolerance: f64,
) -> Result<UnitaryDecomposition, CompileError> {
    let deviation = unitarity_deviation(u);
    if deviation.is_nan() || deviation > tolerance {
        return Err(CompileError::NotUnitary { deviation });
    }
    let det = u.determinant();
    // v = e^{-iφ}U is special unitary up to rounding
    let v = u * Complex::from_polar(1.0, -det.arg() / 2.0);
    let (v00, v10, v11) = (v[(0, 0)], v[(1, 0)], v[(1, 1)]);

    // Zrot(a)Xrot(b)Zrot(c) = [[cos(b/2) e^{-i(a+c)/2}, -i sin(b/2) e^{-i(a-c)/2}],
    //                          [-i sin(b/2) e^{i(a-c)/2},  cos(b/2) e^{i(a+c)/2}]]
    let b = 2.0 * v10.norm().atan2(v00.norm());
    let (a, c) = if v10.norm() < GIMBAL_EPS {
        (2.0 * v11.arg(), 0.0)
    } else if v00.norm() < GIMBAL_EPS {
        (2.0 * v10.arg() + PI, 0.0)
    } else {
        let sum = v11.arg();
        let diff = v10.arg() + PI / 2.0;
        (sum + diff, sum - diff)
    };
    let mut d = UnitaryDecomposition {
        global_phase: 0.0,
        a: canonical_angle(a),
        b,
        c: canonical_angle(c),
    };
    // recover the phase from the largest entry of the phase-free product
    let m = d.matrix();
    let (r, col) = if v00.norm() >= v10.norm() {
        (0, 0)
    } else {
        (1, 0)
    };
    d.global_phase = canonical_angle((u[(r, col)] / m[(r, col)]).arg());
    Ok(d)
}

/// Measurement angles `(α1, α2, α3)` of a three-stage chain realizing `u`
/// up to global phase: `H Zrot(α3) · H Zrot(α2) · H Zrot(α1) ∝ u`, with
/// `α1` measured first.
pub fn chain_angles(u: &Matrix2<Complex>) -> Result<[f64; 3], CompileError> {
    chain_angles_within(u, UNITARY_TOLERANCE)
}

pub fn chain_angles_within(u: &Matrix2<Complex>, tolerance: f64) -> Result<[f64; 3], CompileError> {
    // H Z(α3) H Z(α2) H Z(α1) = H · Z(α3) X(α2) Z(α1), so decompose H·U
    let h = Gate::H.matrix2().unwrap();
    let d = euler_decompose_within(&(h * u), tolerance)?;
    Ok([d.c, d.b, d.a])
}

/// `H Zrot(α3) · H Zrot(α2) · H Zrot(α1)`.
pub fn chain_matrix(angles: &[f64; 3]) -> Matrix2<Complex> {
    let hz = |t: f64| Gate::H.matrix2().unwrap() * Gate::Zrot(t).matrix2().unwrap();
    hz(angles[2]) * hz(angles[1]) * hz(angles[0])
}

/// Largest entry modulus of `chain_matrix(angles) - e^{iφ}u`, with `φ`
/// chosen to align the two.
pub fn chain_reconstruction_error(angles: &[f64; 3], u: &Matrix2<Complex>) -> f64 {
    let m = chain_matrix(angles);
    let t = (u.adjoint() * m).trace();
    let phase = if t.norm() > 0.0 {
        t / t.norm()
    } else {
        Complex::new(1.0, 0.0)
    };
    max_entry(&(m - u * phase))
}
