use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::numerics::{c64, CMat};

#[derive(Serialize, Deserialize)]
struct OpJson {
    kind: String,
    targets: Vec<String>,
    #[serde(default)]
    controls: Vec<String>,
    #[serde(default)]
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    qubits: Vec<String>,
    ops: Vec<OpJson>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    mid_circuit: bool,
}

fn kind_from(name: &str, params: &[f64]) -> Result<GateKind> {
    let want = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "{name} expects {n} parameter(s), got {}",
                params.len()
            )))
        }
    };
    let simple = |k: GateKind| -> Result<GateKind> {
        want(0)?;
        Ok(k)
    };
    let one = |f: fn(f64) -> GateKind| -> Result<GateKind> {
        want(1)?;
        Ok(f(params[0]))
    };
    match name {
        "H" => simple(GateKind::H),
        "X" => simple(GateKind::X),
        "Y" => simple(GateKind::Y),
        "Z" => simple(GateKind::Z),
        "S" => simple(GateKind::S),
        "Sdg" => simple(GateKind::Sdg),
        "T" => simple(GateKind::T),
        "Tdg" => simple(GateKind::Tdg),
        "CNOT" => simple(GateKind::CNOT),
        "CZ" => simple(GateKind::CZ),
        "SWAP" => simple(GateKind::Swap),
        "CSWAP" => simple(GateKind::CSwap),
        "Measure" => simple(GateKind::Measure),
        "Reset" => simple(GateKind::Reset),
        "Rx" => one(GateKind::Rx),
        "Ry" => one(GateKind::Ry),
        "Rz" => one(GateKind::Rz),
        "Phase" => one(GateKind::Phase),
        "ZZPhase" => one(GateKind::ZZPhase),
        "GlobalPhase" => one(GateKind::GlobalPhase),
        "PhasedX" => {
            want(2)?;
            Ok(GateKind::PhasedX {
                theta: params[0],
                phi: params[1],
            })
        }
        "Unitary" => {
            let dim = match params.len() {
                8 => 2,
                32 => 4,
                128 => 8,
                n => {
                    return Err(Error::Schema(format!(
                        "Unitary has {n} parameters; expected 8, 32 or 128"
                    )))
                }
            };
            let entries: Vec<_> = params.chunks(2).map(|p| c64(p[0], p[1])).collect();
            Ok(GateKind::Unitary(CMat::from_row_slice(dim, dim, &entries)))
        }
        other => Err(Error::Schema(format!("unknown gate kind {other:?}"))),
    }
}

impl Circuit {
    pub fn to_json(&self) -> Result<String> {
        let name = |q: &usize| self.qubits[*q].clone();
        let doc = CircuitJson {
            qubits: self.qubits.clone(),
            ops: self
                .ops
                .iter()
                .map(|g| OpJson {
                    kind: g.kind.name().to_string(),
                    targets: g.targets.iter().map(name).collect(),
                    controls: g.controls.iter().map(name).collect(),
                    params: g.kind.params(),
                })
                .collect(),
            mid_circuit: self.allow_mid_circuit_measurement,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses and fully validates a circuit document.
    pub fn from_json(text: &str) -> Result<Circuit> {
        let doc: CircuitJson = serde_json::from_str(text)?;
        let mut c = Circuit::new(&doc.qubits)?;
        c.allow_mid_circuit_measurement = doc.mid_circuit;
        for op in doc.ops {
            let kind = kind_from(&op.kind, &op.params)?;
            let targets = op.targets.iter().map(|q| c.index(q)).collect::<Result<Vec<_>>>()?;
            let controls = op.controls.iter().map(|q| c.index(q)).collect::<Result<Vec<_>>>()?;
            c.push_gate(Gate::new(kind, targets, controls))?;
        }
        Ok(c)
    }
}
