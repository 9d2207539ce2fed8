use super::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::numerics::CMat;
use crate::statevector::StateVector;

/// Structured gate sequence that keeps conjugations explicit, so adding a
/// control touches only the inner part: `C(O†·I·O) = O†·C(I)·O`.
///
/// `Conjugate` runs `outer`, then `inner`, then the inverse of `outer`.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Ops(Vec<Gate>),
    Conjugate { outer: Box<Block>, inner: Box<Block> },
    Seq(Vec<Block>),
    Repeat(Box<Block>, usize),
}

impl Block {
    pub fn ops(gates: Vec<Gate>) -> Self {
        Block::Ops(gates)
    }

    pub fn conjugate(outer: Block, inner: Block) -> Self {
        Block::Conjugate {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    pub fn repeat(self, times: usize) -> Self {
        Block::Repeat(Box::new(self), times)
    }

    pub fn flatten(&self) -> Result<Vec<Gate>> {
        let mut out = Vec::new();
        self.flatten_into(&mut out)?;
        Ok(out)
    }

    fn flatten_into(&self, out: &mut Vec<Gate>) -> Result<()> {
        match self {
            Block::Ops(g) => out.extend(g.iter().cloned()),
            Block::Conjugate { outer, inner } => {
                outer.flatten_into(out)?;
                inner.flatten_into(out)?;
                out.extend(outer.inverse()?.flatten()?);
            }
            Block::Seq(parts) => {
                for p in parts {
                    p.flatten_into(out)?;
                }
            }
            Block::Repeat(b, times) => {
                let once = b.flatten()?;
                for _ in 0..*times {
                    out.extend(once.iter().cloned());
                }
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<Block> {
        Ok(match self {
            Block::Ops(g) => Block::Ops(g.iter().rev().map(Gate::inverse).collect::<Result<_>>()?),
            Block::Conjugate { outer, inner } => Block::conjugate((**outer).clone(), inner.inverse()?),
            Block::Seq(parts) => Block::Seq(parts.iter().rev().map(Block::inverse).collect::<Result<_>>()?),
            Block::Repeat(b, t) => b.inverse()?.repeat(*t),
        })
    }

    pub fn empty() -> Self {
        Block::Ops(Vec::new())
    }

    /// Relabels qubit `q` as `mapping[q]`.
    pub fn remap(&self, mapping: &[usize]) -> Block {
        let gate = |g: &Gate| {
            Gate::new(
                g.kind.clone(),
                g.targets.iter().map(|&q| mapping[q]).collect(),
                g.controls.iter().map(|&q| mapping[q]).collect(),
            )
        };
        match self {
            Block::Ops(g) => Block::Ops(g.iter().map(gate).collect()),
            Block::Conjugate { outer, inner } => Block::conjugate(outer.remap(mapping), inner.remap(mapping)),
            Block::Seq(parts) => Block::Seq(parts.iter().map(|p| p.remap(mapping)).collect()),
            Block::Repeat(b, t) => b.remap(mapping).repeat(*t),
        }
    }

    /// `kind` on `targets`, active when `register` holds `value`
    /// (first register qubit most significant).
    pub fn on_value(register: &[usize], value: usize, kind: GateKind, targets: &[usize]) -> Block {
        let m = register.len();
        let flips = (0..m)
            .filter(|p| (value >> (m - 1 - p)) & 1 == 0)
            .map(|p| Gate::new(GateKind::X, vec![register[p]], vec![]))
            .collect();
        let body = Block::ops(vec![Gate::new(kind, targets.to_vec(), register.to_vec())]);
        Block::conjugate(Block::ops(flips), body)
    }

    /// Circuit over anonymous qubits `q0..` holding this block.
    pub fn to_circuit(&self, num_qubits: usize) -> Result<Circuit> {
        let names: Vec<String> = (0..num_qubits).map(|i| format!("q{i}")).collect();
        let mut c = Circuit::new(&names)?;
        c.push_block(self)?;
        Ok(c)
    }

    pub fn unitary(&self, num_qubits: usize) -> Result<CMat> {
        self.to_circuit(num_qubits)?.unitary_of()
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        self.to_circuit(state.num_qubits())?.apply_unitary_part(state)
    }

    /// `2|0…0⟩⟨0…0| − 1` on `qubits`; a bare Z for a single qubit.
    pub fn zero_reflection(qubits: &[usize]) -> Block {
        match qubits {
            [] => Block::ops(vec![Gate::new(
                GateKind::GlobalPhase(std::f64::consts::PI),
                vec![],
                vec![],
            )]),
            [q] => Block::ops(vec![Gate::new(GateKind::Z, vec![*q], vec![])]),
            _ => {
                let flips = qubits
                    .iter()
                    .map(|&q| Gate::new(GateKind::X, vec![q], vec![]))
                    .collect();
                let (last, rest) = qubits.split_last().expect("non-empty");
                let core = Block::ops(vec![
                    Gate::new(GateKind::Z, vec![*last], rest.to_vec()),
                    Gate::new(GateKind::GlobalPhase(std::f64::consts::PI), vec![], vec![]),
                ]);
                Block::conjugate(Block::ops(flips), core)
            }
        }
    }

    /// `2Π − 1` where Π projects onto the listed basis states of `qubits`
    /// (first listed qubit most significant).
    pub fn basis_reflection(qubits: &[usize], states: &[usize]) -> Block {
        let k = qubits.len();
        let mut parts = vec![Block::ops(vec![Gate::new(
            GateKind::GlobalPhase(std::f64::consts::PI),
            vec![],
            vec![],
        )])];
        let (last, rest) = qubits.split_last().expect("non-empty register");
        for &s in states {
            let flips = (0..k)
                .filter(|p| (s >> (k - 1 - p)) & 1 == 0)
                .map(|p| Gate::new(GateKind::X, vec![qubits[p]], vec![]))
                .collect();
            let flip = Block::ops(vec![Gate::new(GateKind::Z, vec![*last], rest.to_vec())]);
            parts.push(Block::conjugate(Block::ops(flips), flip));
        }
        Block::Seq(parts)
    }

    /// Adds `control` to every gate that is not part of a conjugating frame.
    pub fn controlled(&self, control: usize) -> Result<Block> {
        Ok(match self {
            Block::Ops(g) => Block::Ops(g.iter().map(|g| g.with_control(control)).collect::<Result<_>>()?),
            Block::Conjugate { outer, inner } => Block::conjugate((**outer).clone(), inner.controlled(control)?),
            Block::Seq(parts) => Block::Seq(parts.iter().map(|p| p.controlled(control)).collect::<Result<_>>()?),
            Block::Repeat(b, t) => b.controlled(control)?.repeat(*t),
        })
    }
}
