//! Graphviz rendering of the signal-flow chart.
//!
//! Nodes come out in `(wire, position)` order, solid edges are entanglement
//! and dashed edges carry outcome bits to the steps and outputs that read
//! them. Output is byte-stable for a given circuit.

use std::collections::BTreeMap;
use std::fmt::Write;

use mbqc_core::{CompiledCircuit, LogicalCircuit, NodeId, QubitRole};

fn role_name(role: QubitRole) -> &'static str {
    match role {
        QubitRole::Input => "input",
        QubitRole::Body => "body",
        QubitRole::Junction => "junction",
        QubitRole::Output => "output",
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn angle(a: f64) -> String {
    // -0.0 would otherwise print as "-0.000000"
    let a = if a == 0.0 { 0.0 } else { a };
    format!("{a:.6}")
}

pub fn render(circuit: &LogicalCircuit, compiled: &CompiledCircuit) -> String {
    let graph = &compiled.graph;
    let angles: BTreeMap<NodeId, f64> = compiled
        .pattern
        .steps
        .iter()
        .map(|s| (s.qubit, s.base_angle))
        .collect();

    let mut out = String::new();
    out.push_str("digraph signal_flow {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=circle];\n");

    let mut order: Vec<_> = graph.nodes().iter().collect();
    order.sort_by_key(|n| (n.wire.0, n.position));
    for n in &order {
        let wire = circuit
            .wires
            .get(n.wire.0)
            .map_or_else(|| format!("w{}", n.wire.0), |w| escape(&w.name));
        let mut label = format!("q{}\\n{}\\n{}", n.id, role_name(n.role), wire);
        if let Some(&a) = angles.get(&n.id) {
            let _ = write!(label, "\\nalpha={}", angle(a));
        }
        let _ = writeln!(out, "  q{} [label=\"{label}\"];", n.id);
    }

    for (a, b) in graph.chain_edges() {
        let _ = writeln!(out, "  q{a} -> q{b} [dir=none];");
    }
    for (a, b) in graph.junction_edges() {
        let _ = writeln!(out, "  q{a} -> q{b} [dir=none, style=bold];");
    }

    let mut deps: Vec<(NodeId, NodeId, &str)> = Vec::new();
    for s in &compiled.pattern.steps {
        deps.extend(s.sign_deps.iter().map(|&d| (d, s.qubit, "sign")));
        deps.extend(s.flip_deps.iter().map(|&d| (d, s.qubit, "flip")));
    }
    for c in &compiled.pattern.corrections {
        deps.extend(c.x_deps.iter().map(|&d| (d, c.qubit, "X")));
        deps.extend(c.z_deps.iter().map(|&d| (d, c.qubit, "Z")));
    }
    deps.sort();
    for (from, to, label) in deps {
        let _ = writeln!(out, "  q{from} -> q{to} [style=dashed, label=\"{label}\"];");
    }
    out.push_str("}\n");
    out
}
