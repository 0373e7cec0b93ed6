//! JSON circuit files.
//!
//! ```json
//! {"wires": [{"id": "a", "input": {"amplitudes": [[1, 0], [0, 0]]}}],
//!  "ops": [{"type": "rot", "wire": "a", "alpha": 0.5},
//!          {"type": "cz", "wires": ["a", "b"], "alphas": [0.1, 0.2]}]}
//! ```

use mbqc_core::compiler::{LogicalCircuit, LogicalOp, Wire};
use mbqc_core::{Complex, Qubit};
use serde::Deserialize;

use crate::CliError;

/// Inputs further than this from unit norm are rejected rather than
/// renormalized.
pub const RENORMALIZE_LIMIT: f64 = 1e-6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    wires: Vec<WireEntry>,
    ops: Vec<OpEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEntry {
    id: String,
    input: InputEntry,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputEntry {
    amplitudes: [[f64; 2]; 2],
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum OpEntry {
    Rot {
        wire: String,
        alpha: f64,
    },
    Cz {
        wires: [String; 2],
        #[serde(default)]
        alphas: Option<[f64; 2]>,
    },
}

/// A parsed circuit plus any warnings raised while loading it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCircuit {
    pub circuit: LogicalCircuit,
    pub warnings: Vec<String>,
}

pub fn parse_circuit(text: &str) -> Result<LoadedCircuit, CliError> {
    let file: CircuitFile = serde_json::from_str(text).map_err(CliError::Parse)?;
    let mut warnings = Vec::new();

    let mut wires = Vec::with_capacity(file.wires.len());
    for (i, w) in file.wires.iter().enumerate() {
        let [[r0, i0], [r1, i1]] = w.input.amplitudes;
        let q = Qubit::new(Complex::new(r0, i0), Complex::new(r1, i1));
        if !q.is_finite() {
            return Err(CliError::Circuit(format!(
                "wires[{i}] (`{}`): non-finite amplitude",
                w.id
            )));
        }
        let norm = q.norm();
        let deviation = (norm - 1.0).abs();
        if deviation > RENORMALIZE_LIMIT {
            return Err(CliError::Circuit(format!(
                "wires[{i}] (`{}`): input norm {norm} is not 1 within {RENORMALIZE_LIMIT:e}",
                w.id
            )));
        }
        let input = if deviation > 0.0 {
            warnings.push(format!(
                "wires[{i}] (`{}`): input norm {norm}, renormalized",
                w.id
            ));
            q.normalized()
        } else {
            q
        };
        wires.push(Wire {
            name: w.id.clone(),
            input,
        });
    }

    let lookup = |op: usize, name: &str| {
        file.wires
            .iter()
            .position(|w| w.id == name)
            .ok_or_else(|| CliError::Circuit(format!("ops[{op}]: unknown wire `{name}`")))
    };
    let finite = |op: usize, v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Circuit(format!("ops[{op}]: angle is not finite")))
        }
    };
    let mut ops = Vec::with_capacity(file.ops.len());
    for (i, op) in file.ops.iter().enumerate() {
        ops.push(match op {
            OpEntry::Rot { wire, alpha } => LogicalOp::Rot {
                wire: lookup(i, wire)?,
                alpha: finite(i, *alpha)?,
            },
            OpEntry::Cz {
                wires: [a, b],
                alphas,
            } => LogicalOp::Junction {
                wires: (lookup(i, a)?, lookup(i, b)?),
                angles: match alphas {
                    Some([x, y]) => Some((finite(i, *x)?, finite(i, *y)?)),
                    None => None,
                },
            },
        });
    }

    let circuit = LogicalCircuit { wires, ops };
    circuit.check().map_err(CliError::Compile)?;
    Ok(LoadedCircuit { circuit, warnings })
}
