//! Cluster graphs built from one-dimensional wires joined by junction pairs.

use std::fmt;

use thiserror::Error;

use crate::statevector::{Gate, StateError, StateVector};

pub type NodeId = usize;

/// Index of a wire in the order wires were added to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WireId(pub usize);

impl fmt::Display for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitRole {
    Input,
    Body,
    Junction,
    Output,
}

impl fmt::Display for QubitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QubitRole::Input => "Input",
            QubitRole::Body => "Body",
            QubitRole::Junction => "Junction",
            QubitRole::Output => "Output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    pub id: NodeId,
    pub wire: WireId,
    pub position: usize,
    pub role: QubitRole,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("a wire needs at least one qubit")]
    EmptyWire,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("junction endpoints {0} and {1} lie on the same wire")]
    SameWire(NodeId, NodeId),
    #[error("node {0} is already part of a junction")]
    AlreadyJunction(NodeId),
    #[error("register has {state} qubits but the graph has {graph} nodes")]
    SizeMismatch { state: usize, graph: usize },
    #[error("cannot entangle: qubit {0} already measured")]
    Measured(NodeId),
    #[error(transparent)]
    State(#[from] StateError),
}

/// One violated graph invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    JunctionWithoutPartner(NodeId),
    JunctionEdgeSameWire(NodeId, NodeId),
    NodeInSeveralJunctions(NodeId),
    DegreeExceeded { node: NodeId, degree: usize },
    PositionsNotConsecutive(WireId),
    MissingInput(WireId),
    InputNotFirst(NodeId),
    MissingOutput(WireId),
    OutputNotFinal(NodeId),
    AdjacentJunctions(NodeId, NodeId),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::JunctionWithoutPartner(n) => write!(f, "junction node q{n} has no partner"),
            Diagnostic::JunctionEdgeSameWire(a, b) => {
                write!(f, "junction edge q{a}-q{b} joins nodes of the same wire")
            }
            Diagnostic::NodeInSeveralJunctions(n) => {
                write!(f, "node q{n} appears in more than one junction edge")
            }
            Diagnostic::DegreeExceeded { node, degree } => {
                write!(f, "node q{node} has degree {degree}, limit is 3")
            }
            Diagnostic::PositionsNotConsecutive(w) => {
                write!(f, "positions on wire {w} are not consecutive from 0")
            }
            Diagnostic::MissingInput(w) => write!(f, "wire {w} has no input node"),
            Diagnostic::InputNotFirst(n) => write!(f, "input node q{n} is not at position 0"),
            Diagnostic::MissingOutput(w) => write!(f, "wire {w} has no output node"),
            Diagnostic::OutputNotFinal(n) => {
                write!(f, "output node q{n} is not at the final position")
            }
            Diagnostic::AdjacentJunctions(a, b) => {
                write!(f, "junction nodes q{a} and q{b} are adjacent on their wire")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterGraph {
    nodes: Vec<ClusterNode>,
    wires: Vec<Vec<NodeId>>,
    chain_edges: Vec<(NodeId, NodeId)>,
    junction_edges: Vec<(NodeId, NodeId)>,
}

/// A single linear wire as its own graph.
pub fn build_wire(num_qubits: usize) -> Result<ClusterGraph, ClusterError> {
    let mut g = ClusterGraph::new();
    g.add_wire(num_qubits)?;
    Ok(g)
}

impl ClusterGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a linear chain: `Input` at position 0, `Output` at the end,
    /// `Body` in between. A one-node wire is a passthrough whose node keeps
    /// the `Output` role. Node ids continue from the existing nodes.
    pub fn add_wire(&mut self, num_qubits: usize) -> Result<WireId, ClusterError> {
        if num_qubits == 0 {
            return Err(ClusterError::EmptyWire);
        }
        let wire = WireId(self.wires.len());
        let first = self.nodes.len();
        let ids: Vec<NodeId> = (first..first + num_qubits).collect();
        for (position, &id) in ids.iter().enumerate() {
            let role = if position + 1 == num_qubits {
                QubitRole::Output
            } else if position == 0 {
                QubitRole::Input
            } else {
                QubitRole::Body
            };
            self.nodes.push(ClusterNode {
                id,
                wire,
                position,
                role,
            });
        }
        self.chain_edges
            .extend(ids.windows(2).map(|w| (w[0], w[1])));
        self.wires.push(ids);
        Ok(wire)
    }

    /// Joins two nodes on distinct wires with a junction edge. Body nodes
    /// become `Junction`; input and output nodes keep their role.
    pub fn add_junction(&mut self, a: NodeId, b: NodeId) -> Result<(), ClusterError> {
        let (wa, wb) = (self.node_checked(a)?.wire, self.node_checked(b)?.wire);
        if wa == wb {
            return Err(ClusterError::SameWire(a, b));
        }
        for n in [a, b] {
            if self.partner(n).is_some() {
                return Err(ClusterError::AlreadyJunction(n));
            }
        }
        for n in [a, b] {
            if self.nodes[n].role == QubitRole::Body {
                self.nodes[n].role = QubitRole::Junction;
            }
        }
        self.junction_edges.push((a, b));
        Ok(())
    }

    /// Overrides a node's role. Only needed to build deliberately malformed
    /// graphs; `validate` reports the result.
    pub fn set_role(&mut self, node: NodeId, role: QubitRole) -> Result<(), ClusterError> {
        self.node_checked(node)?;
        self.nodes[node].role = role;
        Ok(())
    }

    /// Adds a junction edge without any checks. Test and fixture use only.
    pub fn push_junction_edge_unchecked(&mut self, a: NodeId, b: NodeId) {
        self.junction_edges.push((a, b));
    }

    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&ClusterNode> {
        self.nodes.get(id)
    }

    fn node_checked(&self, id: NodeId) -> Result<&ClusterNode, ClusterError> {
        self.nodes.get(id).ok_or(ClusterError::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_wires(&self) -> usize {
        self.wires.len()
    }

    pub fn wire_nodes(&self, wire: WireId) -> &[NodeId] {
        &self.wires[wire.0]
    }

    pub fn chain_edges(&self) -> &[(NodeId, NodeId)] {
        &self.chain_edges
    }

    pub fn junction_edges(&self) -> &[(NodeId, NodeId)] {
        &self.junction_edges
    }

    /// Chain neighbor one position earlier.
    pub fn predecessor(&self, id: NodeId) -> Option<NodeId> {
        let n = self.nodes.get(id)?;
        n.position.checked_sub(1).map(|p| self.wires[n.wire.0][p])
    }

    pub fn successor(&self, id: NodeId) -> Option<NodeId> {
        let n = self.nodes.get(id)?;
        self.wires[n.wire.0].get(n.position + 1).copied()
    }

    /// The other end of this node's junction edge, if any.
    pub fn partner(&self, id: NodeId) -> Option<NodeId> {
        self.junction_edges.iter().find_map(|&(a, b)| match () {
            _ if a == id => Some(b),
            _ if b == id => Some(a),
            _ => None,
        })
    }

    pub fn is_output(&self, id: NodeId) -> bool {
        self.wires.iter().any(|w| w.last() == Some(&id))
    }

    /// The final node of every wire, in wire order.
    pub fn outputs(&self) -> Vec<NodeId> {
        self.wires
            .iter()
            .filter_map(|w| w.last().copied())
            .collect()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        let count =
            |edges: &[(NodeId, NodeId)]| edges.iter().filter(|&&(a, b)| a == id || b == id).count();
        count(&self.chain_edges) + count(&self.junction_edges)
    }

    /// Every invariant violation, or `Ok` if there are none.
    pub fn validate(&self) -> Result<(), Vec<Diagnostic>> {
        let mut diags = Vec::new();

        for &(a, b) in &self.junction_edges {
            if self.nodes[a].wire == self.nodes[b].wire {
                diags.push(Diagnostic::JunctionEdgeSameWire(a, b));
            }
        }
        for node in &self.nodes {
            let uses = self
                .junction_edges
                .iter()
                .filter(|&&(a, b)| a == node.id || b == node.id)
                .count();
            if uses > 1 {
                diags.push(Diagnostic::NodeInSeveralJunctions(node.id));
            }
            if node.role == QubitRole::Junction && uses == 0 {
                diags.push(Diagnostic::JunctionWithoutPartner(node.id));
            }
            let degree = self.degree(node.id);
            if degree > 3 {
                diags.push(Diagnostic::DegreeExceeded {
                    node: node.id,
                    degree,
                });
            }
        }

        for (w, ids) in self.wires.iter().enumerate() {
            let wire = WireId(w);
            let consecutive = ids
                .iter()
                .enumerate()
                .all(|(p, &id)| self.nodes[id].position == p && self.nodes[id].wire == wire);
            if !consecutive {
                diags.push(Diagnostic::PositionsNotConsecutive(wire));
            }
            let last = ids.len() - 1;
            let role_at = |p: usize| self.nodes[ids[p]].role;
            let mut seen_input = false;
            let mut seen_output = false;
            for (p, &id) in ids.iter().enumerate() {
                match self.nodes[id].role {
                    QubitRole::Input if p != 0 => diags.push(Diagnostic::InputNotFirst(id)),
                    QubitRole::Output if p != last => diags.push(Diagnostic::OutputNotFinal(id)),
                    QubitRole::Input => seen_input = true,
                    QubitRole::Output => seen_output = true,
                    _ => {}
                }
            }
            // Position 0 may carry a junction instead of the Input role, and a
            // single-node wire is its own input.
            let input_ok = seen_input
                || last == 0
                || (role_at(0) == QubitRole::Junction && self.partner(ids[0]).is_some());
            if !input_ok {
                diags.push(Diagnostic::MissingInput(wire));
            }
            if !seen_output {
                diags.push(Diagnostic::MissingOutput(wire));
            }
            for pair in ids.windows(2) {
                if self.partner(pair[0]).is_some() && self.partner(pair[1]).is_some() {
                    diags.push(Diagnostic::AdjacentJunctions(pair[0], pair[1]));
                }
            }
        }

        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    /// Applies CZ once per chain edge and once per junction edge.
    pub fn entangle(&self, state: &mut StateVector) -> Result<(), ClusterError> {
        self.entangle_edges(
            state,
            self.chain_edges.iter().chain(&self.junction_edges).copied(),
        )
    }

    /// Same as [`entangle`](Self::entangle) with the edge order reversed.
    pub fn entangle_reversed(&self, state: &mut StateVector) -> Result<(), ClusterError> {
        let edges: Vec<_> = self
            .chain_edges
            .iter()
            .chain(&self.junction_edges)
            .copied()
            .collect();
        self.entangle_edges(state, edges.into_iter().rev())
    }

    fn entangle_edges(
        &self,
        state: &mut StateVector,
        edges: impl Iterator<Item = (NodeId, NodeId)>,
    ) -> Result<(), ClusterError> {
        if state.num_qubits() != self.nodes.len() {
            return Err(ClusterError::SizeMismatch {
                state: state.num_qubits(),
                graph: self.nodes.len(),
            });
        }
        if let Some(q) = (0..state.num_qubits()).find(|&q| state.is_measured(q)) {
            return Err(ClusterError::Measured(q));
        }
        for (a, b) in edges {
            state.apply_gate(Gate::Cz, &[a, b])?;
        }
        Ok(())
    }
}
