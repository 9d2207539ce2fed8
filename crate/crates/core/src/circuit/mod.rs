//! Gate-level circuit representation: building, composition, inversion,
//! control, unitary extraction and JSON serialisation.
//!
//! Rotation conventions: `Rx(φ) = exp(-iφX/2)`, `Ry(φ) = exp(-iφY/2)`,
//! `Rz(φ) = exp(-iφZ/2)`, `Phase(λ) = diag(1, e^{iλ})`,
//! `PhasedX(θ, φ) = Rz(φ)·Rx(θ)·Rz(-φ)` and `ZZPhase(γ) = exp(-iγ/2 Z⊗Z)`.
//! All angles are radians.

mod block;
mod json;
pub mod transpile;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{c64, identity, unitarity_defect, CMat, I, ONE, ZERO};
use crate::statevector::{apply_to_amplitudes, StateVector};

pub use block::Block;
pub use transpile::{transpile_native, GateCountReport};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    Phase(f64),
    PhasedX {
        theta: f64,
        phi: f64,
    },
    ZZPhase(f64),
    /// Targets `[control, target]`.
    CNOT,
    CZ,
    Swap,
    /// Targets `[control, a, b]`.
    CSwap,
    /// Generic unitary on up to three targets.
    Unitary(CMat),
    /// Scalar phase `e^{iφ}`; acts on no targets, becomes a phase gate when controlled.
    GlobalPhase(f64),
    Measure,
    Reset,
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdg => "Sdg",
            GateKind::T => "T",
            GateKind::Tdg => "Tdg",
            GateKind::Rx(_) => "Rx",
            GateKind::Ry(_) => "Ry",
            GateKind::Rz(_) => "Rz",
            GateKind::Phase(_) => "Phase",
            GateKind::PhasedX { .. } => "PhasedX",
            GateKind::ZZPhase(_) => "ZZPhase",
            GateKind::CNOT => "CNOT",
            GateKind::CZ => "CZ",
            GateKind::Swap => "SWAP",
            GateKind::CSwap => "CSWAP",
            GateKind::Unitary(_) => "Unitary",
            GateKind::GlobalPhase(_) => "GlobalPhase",
            GateKind::Measure => "Measure",
            GateKind::Reset => "Reset",
        }
    }

    /// Number of target qubits the kind acts on.
    pub fn arity(&self) -> usize {
        match self {
            GateKind::ZZPhase(_) | GateKind::CNOT | GateKind::CZ | GateKind::Swap => 2,
            GateKind::CSwap => 3,
            GateKind::Unitary(m) => m.nrows().trailing_zeros() as usize,
            GateKind::GlobalPhase(_) => 0,
            _ => 1,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            GateKind::Rx(a) | GateKind::Ry(a) | GateKind::Rz(a) | GateKind::Phase(a) => vec![*a],
            GateKind::ZZPhase(a) | GateKind::GlobalPhase(a) => vec![*a],
            GateKind::PhasedX { theta, phi } => vec![*theta, *phi],
            GateKind::Unitary(m) => {
                // Row-major (re, im) pairs.
                let mut out = Vec::with_capacity(2 * m.len());
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        out.push(m[(r, c)].re);
                        out.push(m[(r, c)].im);
                    }
                }
                out
            }
            _ => vec![],
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, GateKind::Measure | GateKind::Reset)
    }

    /// Matrix on the targets (first target most significant), or `None` for
    /// measure/reset.
    pub fn matrix(&self) -> Option<CMat> {
        let m2 = |a: Complex64, b: Complex64, c: Complex64, d: Complex64| CMat::from_row_slice(2, 2, &[a, b, c, d]);
        let r = FRAC_1_SQRT_2;
        Some(match self {
            GateKind::H => m2(c64(r, 0.0), c64(r, 0.0), c64(r, 0.0), c64(-r, 0.0)),
            GateKind::X => m2(ZERO, ONE, ONE, ZERO),
            GateKind::Y => m2(ZERO, -I, I, ZERO),
            GateKind::Z => m2(ONE, ZERO, ZERO, -ONE),
            GateKind::S => m2(ONE, ZERO, ZERO, I),
            GateKind::Sdg => m2(ONE, ZERO, ZERO, -I),
            GateKind::T => m2(ONE, ZERO, ZERO, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
            GateKind::Tdg => m2(
                ONE,
                ZERO,
                ZERO,
                Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4),
            ),
            GateKind::Rx(a) => {
                let (s, c) = (a / 2.0).sin_cos();
                m2(c64(c, 0.0), c64(0.0, -s), c64(0.0, -s), c64(c, 0.0))
            }
            GateKind::Ry(a) => {
                let (s, c) = (a / 2.0).sin_cos();
                m2(c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0))
            }
            GateKind::Rz(a) => m2(
                Complex64::from_polar(1.0, -a / 2.0),
                ZERO,
                ZERO,
                Complex64::from_polar(1.0, a / 2.0),
            ),
            GateKind::Phase(a) => m2(ONE, ZERO, ZERO, Complex64::from_polar(1.0, *a)),
            GateKind::PhasedX { theta, phi } => {
                let rz = |a: f64| GateKind::Rz(a).matrix().expect("unitary");
                rz(*phi) * GateKind::Rx(*theta).matrix().expect("unitary") * rz(-phi)
            }
            GateKind::ZZPhase(g) => {
                let a = Complex64::from_polar(1.0, -g / 2.0);
                let b = Complex64::from_polar(1.0, g / 2.0);
                CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![a, b, b, a]))
            }
            GateKind::CNOT => permutation(4, &[0, 1, 3, 2]),
            GateKind::CZ => CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE])),
            GateKind::Swap => permutation(4, &[0, 2, 1, 3]),
            GateKind::CSwap => permutation(8, &[0, 1, 2, 3, 4, 6, 5, 7]),
            GateKind::Unitary(m) => m.clone(),
            GateKind::GlobalPhase(a) => CMat::from_element(1, 1, Complex64::from_polar(1.0, *a)),
            GateKind::Measure | GateKind::Reset => return None,
        })
    }

    pub fn inverse(&self) -> Result<GateKind> {
        Ok(match self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::T => GateKind::Tdg,
            GateKind::Tdg => GateKind::T,
            GateKind::Rx(a) => GateKind::Rx(-a),
            GateKind::Ry(a) => GateKind::Ry(-a),
            GateKind::Rz(a) => GateKind::Rz(-a),
            GateKind::Phase(a) => GateKind::Phase(-a),
            GateKind::PhasedX { theta, phi } => GateKind::PhasedX {
                theta: -theta,
                phi: *phi,
            },
            GateKind::ZZPhase(g) => GateKind::ZZPhase(-g),
            GateKind::GlobalPhase(a) => GateKind::GlobalPhase(-a),
            GateKind::Unitary(m) => GateKind::Unitary(m.adjoint()),
            GateKind::Measure | GateKind::Reset => {
                return Err(Error::NotUnitary(format!("{} has no inverse", self.name())))
            }
            other => other.clone(),
        })
    }

    fn validate(&self) -> Result<()> {
        let bad_angle = self.params().iter().any(|p| !p.is_finite());
        if bad_angle {
            return Err(Error::Validation(format!("{} has a non-finite parameter", self.name())));
        }
        if let GateKind::Unitary(m) = self {
            let dim = m.nrows();
            if !m.is_square() || !dim.is_power_of_two() || !(2..=8).contains(&dim) {
                return Err(Error::Validation(format!(
                    "generic unitary must be 2, 4 or 8 dimensional, got {dim}"
                )));
            }
            let defect = unitarity_defect(m);
            if defect > 1e-10 {
                return Err(Error::Validation(format!(
                    "generic gate is not unitary (defect {defect:e})"
                )));
            }
        }
        Ok(())
    }
}

fn permutation(dim: usize, images: &[usize]) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for (src, &dst) in images.iter().enumerate() {
        m[(dst, src)] = ONE;
    }
    m
}

/// A gate kind applied to concrete qubit indices of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>) -> Self {
        Self {
            kind,
            targets,
            controls,
        }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(&self.targets).copied()
    }

    pub fn inverse(&self) -> Result<Gate> {
        Ok(Gate::new(
            self.kind.inverse()?,
            self.targets.clone(),
            self.controls.clone(),
        ))
    }

    pub fn with_control(&self, control: usize) -> Result<Gate> {
        if !self.kind.is_unitary() {
            return Err(Error::NotUnitary(format!("cannot control {}", self.kind.name())));
        }
        let mut g = self.clone();
        g.controls.push(control);
        Ok(g)
    }

    /// Count label: one `C` per control followed by the kind name.
    pub fn label(&self) -> String {
        format!("{}{}", "C".repeat(self.controls.len()), self.kind.name())
    }
}

/// Ordered list of gate applications over named qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: Vec<String>,
    ops: Vec<Gate>,
    allow_mid_circuit_measurement: bool,
}

impl Circuit {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let qubits: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(Error::NameCollision(q.clone()));
            }
        }
        if qubits.is_empty() || qubits.len() > crate::statevector::MAX_QUBITS {
            return Err(Error::Validation(format!(
                "circuit needs 1..=16 qubits, got {}",
                qubits.len()
            )));
        }
        Ok(Self {
            qubits,
            ops: Vec::new(),
            allow_mid_circuit_measurement: false,
        })
    }

    /// Permits measurements followed by further gates on the measured qubit.
    pub fn allow_mid_circuit_measurement(mut self) -> Self {
        self.allow_mid_circuit_measurement = true;
        self
    }

    pub fn qubits(&self) -> &[String] {
        &self.qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.qubits
            .iter()
            .position(|q| q == name)
            .ok_or_else(|| Error::Addressing(format!("unknown qubit {name:?}")))
    }

    pub fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index(n)).collect()
    }

    /// Appends a validated gate.
    pub fn push_gate(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.kind.validate()?;
        if gate.targets.len() != gate.kind.arity() {
            return Err(Error::Addressing(format!(
                "{} expects {} target(s), got {}",
                gate.kind.name(),
                gate.kind.arity(),
                gate.targets.len()
            )));
        }
        if !gate.kind.is_unitary() && !gate.controls.is_empty() {
            return Err(Error::Validation(format!("{} cannot be controlled", gate.kind.name())));
        }
        let n = self.num_qubits();
        let mut seen = vec![false; n];
        for q in gate.qubits() {
            if q >= n {
                return Err(Error::Addressing(format!("qubit index {q} out of range ({n} qubits)")));
            }
            if seen[q] {
                return Err(Error::Addressing(format!(
                    "qubit {} used twice in {}",
                    self.qubits[q],
                    gate.kind.name()
                )));
            }
            seen[q] = true;
        }
        if !self.allow_mid_circuit_measurement {
            if let Some(q) = gate.qubits().find(|&q| self.is_measured(q)) {
                return Err(Error::Validation(format!(
                    "qubit {} is used after being measured; mark the circuit for mid-circuit measurement",
                    self.qubits[q]
                )));
            }
        }
        self.ops.push(gate);
        Ok(self)
    }

    fn is_measured(&self, q: usize) -> bool {
        self.ops
            .iter()
            .any(|g| g.kind == GateKind::Measure && g.targets[0] == q)
    }

    pub fn push(&mut self, kind: GateKind, targets: &[usize], controls: &[usize]) -> Result<&mut Self> {
        self.push_gate(Gate::new(kind, targets.to_vec(), controls.to_vec()))
    }

    /// Appends by qubit names.
    pub fn add(&mut self, kind: GateKind, targets: &[&str], controls: &[&str]) -> Result<&mut Self> {
        let t = self.indices(targets)?;
        let c = self.indices(controls)?;
        self.push(kind, &t, &c)
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.push(GateKind::H, &[q], &[])
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.push(GateKind::X, &[q], &[])
    }

    pub fn z(&mut self, q: usize) -> Result<&mut Self> {
        self.push(GateKind::Z, &[q], &[])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(GateKind::CNOT, &[control, target], &[])
    }

    pub fn measure(&mut self, q: usize) -> Result<&mut Self> {
        self.push(GateKind::Measure, &[q], &[])
    }

    pub fn measure_all(&mut self) -> Result<&mut Self> {
        for q in 0..self.num_qubits() {
            self.measure(q)?;
        }
        Ok(self)
    }

    /// Appends a structured block, flattening conjugations.
    pub fn push_block(&mut self, block: &Block) -> Result<&mut Self> {
        for g in block.flatten()? {
            self.push_gate(g)?;
        }
        Ok(self)
    }

    /// Appends `other`, mapping its qubit `i` to `mapping[i]` of `self`.
    pub fn append_mapped(&mut self, other: &Circuit, mapping: &[usize]) -> Result<&mut Self> {
        if mapping.len() != other.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: other.num_qubits(),
                got: mapping.len(),
            });
        }
        for g in &other.ops {
            self.push_gate(Gate::new(
                g.kind.clone(),
                g.targets.iter().map(|&q| mapping[q]).collect(),
                g.controls.iter().map(|&q| mapping[q]).collect(),
            ))?;
        }
        Ok(self)
    }

    /// Appends `other` over the same register by name.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        let mapping: Vec<usize> = other.qubits.iter().map(|q| self.index(q)).collect::<Result<_>>()?;
        self.append_mapped(other, &mapping)
    }

    /// Unitary ops as a block over this circuit's indices.
    pub fn to_block(&self) -> Block {
        Block::ops(self.ops.clone())
    }

    pub fn inverse(&self) -> Result<Circuit> {
        let mut out = Circuit {
            qubits: self.qubits.clone(),
            ops: Vec::with_capacity(self.ops.len()),
            allow_mid_circuit_measurement: self.allow_mid_circuit_measurement,
        };
        for g in self.ops.iter().rev() {
            out.ops.push(g.inverse()?);
        }
        Ok(out)
    }

    /// Same circuit with a new control qubit prepended as the most
    /// significant register: `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U`.
    pub fn controlled(&self, control: &str) -> Result<Circuit> {
        if self.qubits.iter().any(|q| q == control) {
            return Err(Error::NameCollision(control.to_string()));
        }
        let mut names = vec![control.to_string()];
        names.extend(self.qubits.iter().cloned());
        let mut out = Circuit::new(&names)?;
        for g in &self.ops {
            let shifted = Gate::new(
                g.kind.clone(),
                g.targets.iter().map(|q| q + 1).collect(),
                g.controls.iter().map(|q| q + 1).collect(),
            );
            out.push_gate(shifted.with_control(0)?)?;
        }
        Ok(out)
    }

    /// Dense unitary of the ordered gate product.
    pub fn unitary_of(&self) -> Result<CMat> {
        if let Some(g) = self.ops.iter().find(|g| !g.kind.is_unitary()) {
            return Err(Error::NotUnitary(format!("circuit contains {}", g.kind.name())));
        }
        let n = self.num_qubits();
        let dim = 1usize << n;
        let matrices: Vec<CMat> = self.ops.iter().map(|g| g.kind.matrix().expect("unitary")).collect();
        let mut u = identity(dim);
        for col in 0..dim {
            let mut amps: Vec<Complex64> = u.column(col).iter().copied().collect();
            for (g, m) in self.ops.iter().zip(&matrices) {
                apply_to_amplitudes(&mut amps, n, &g.targets, &g.controls, m);
            }
            u.set_column(col, &nalgebra::DVector::from_vec(amps));
        }
        Ok(u)
    }

    /// Qubits measured by the circuit, in measurement order.
    pub fn measured_qubits(&self) -> Vec<usize> {
        self.ops
            .iter()
            .filter(|g| g.kind == GateKind::Measure)
            .map(|g| g.targets[0])
            .collect()
    }

    /// The circuit without measurement operations.
    pub fn without_measurements(&self) -> Circuit {
        Circuit {
            qubits: self.qubits.clone(),
            ops: self
                .ops
                .iter()
                .filter(|g| g.kind != GateKind::Measure)
                .cloned()
                .collect(),
            allow_mid_circuit_measurement: self.allow_mid_circuit_measurement,
        }
    }

    pub fn has_mid_circuit_operations(&self) -> bool {
        self.ops.iter().enumerate().any(|(i, g)| match g.kind {
            GateKind::Reset => true,
            GateKind::Measure => {
                let q = g.targets[0];
                self.ops[i + 1..]
                    .iter()
                    .any(|later| later.kind != GateKind::Measure && later.qubits().any(|p| p == q))
            }
            _ => false,
        })
    }

    /// Runs the unitary part of the circuit on `state` (measurements skipped).
    pub fn apply_unitary_part(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                got: state.num_qubits(),
            });
        }
        if self.has_mid_circuit_operations() {
            return Err(Error::Validation(
                "circuit has mid-circuit measurement or reset; use a shot executor".into(),
            ));
        }
        for g in &self.ops {
            if let Some(m) = g.kind.matrix() {
                state.apply_matrix_unchecked(&g.targets, &g.controls, &m);
            }
        }
        Ok(())
    }

    /// Final state from `|0…0⟩` (measurements skipped).
    pub fn final_state(&self) -> Result<StateVector> {
        let mut s = StateVector::zero(self.num_qubits())?;
        self.apply_unitary_part(&mut s)?;
        Ok(s)
    }

    /// Gate counts keyed by [`Gate::label`].
    pub fn gate_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.ops {
            *counts.entry(g.label()).or_insert(0) += 1;
        }
        counts
    }

    pub fn max_controls(&self) -> usize {
        self.ops.iter().map(|g| g.controls.len()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{kron, max_abs_diff};
    use proptest::prelude::*;

    fn random_circuit(seed: u64, n: usize, len: usize) -> Circuit {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let mut c = Circuit::new(&names).unwrap();
        for _ in 0..len {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n);
            while b == a {
                b = rng.random_range(0..n);
            }
            let angle = rng.random_range(-3.0..3.0);
            let kind = match rng.random_range(0..9) {
                0 => GateKind::H,
                1 => GateKind::Rx(angle),
                2 => GateKind::Ry(angle),
                3 => GateKind::Rz(angle),
                4 => GateKind::S,
                5 => GateKind::CNOT,
                6 => GateKind::CZ,
                7 => GateKind::ZZPhase(angle),
                _ => GateKind::PhasedX {
                    theta: angle,
                    phi: angle * 0.3,
                },
            };
            let targets = if kind.arity() == 2 { vec![a, b] } else { vec![a] };
            c.push(kind, &targets, &[]).unwrap();
        }
        c
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(&["a", "b"]).unwrap();
        assert_eq!(c.unitary_of().unwrap(), identity(4));
    }

    #[test]
    fn measurement_blocks_unitary() {
        let mut c = Circuit::new(&["a"]).unwrap();
        c.h(0).unwrap().measure(0).unwrap();
        assert!(matches!(c.unitary_of(), Err(Error::NotUnitary(_))));
        assert!(c.h(0).is_err(), "gate after terminal measurement must be rejected");
        let mut m = Circuit::new(&["a"]).unwrap().allow_mid_circuit_measurement();
        m.measure(0).unwrap().h(0).unwrap();
        assert!(m.has_mid_circuit_operations());
    }

    #[test]
    fn controlled_z_is_cz() {
        let mut c = Circuit::new(&["a"]).unwrap();
        c.z(0).unwrap();
        let cz = c.controlled("c").unwrap();
        assert_eq!(cz.unitary_of().unwrap(), GateKind::CZ.matrix().unwrap());
        assert!(matches!(c.controlled("a"), Err(Error::NameCollision(_))));
    }

    #[test]
    fn controlled_identity_is_identity() {
        let c = Circuit::new(&["a", "b"]).unwrap();
        assert_eq!(c.controlled("c").unwrap().unitary_of().unwrap(), identity(8));
    }

    #[test]
    fn controlled_block_structure() {
        let c = random_circuit(5, 3, 20);
        let u = c.unitary_of().unwrap();
        let cu = c.controlled("ctl").unwrap().unitary_of().unwrap();
        let p0 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let p1 = CMat::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
        let expected = kron(&p0, &identity(8)) + kron(&p1, &u);
        assert!(max_abs_diff(&cu, &expected) < 1e-12);
    }

    #[test]
    fn global_phase_becomes_phase_gate_under_control() {
        let mut c = Circuit::new(&["a"]).unwrap();
        c.push(GateKind::GlobalPhase(0.4), &[], &[]).unwrap();
        let cu = c.controlled("c").unwrap().unitary_of().unwrap();
        let expected = kron(&GateKind::Phase(0.4).matrix().unwrap(), &identity(2));
        assert!(max_abs_diff(&cu, &expected) < 1e-15);
    }

    #[test]
    fn gate_matrices_are_unitary() {
        let kinds = [
            GateKind::H,
            GateKind::Y,
            GateKind::T,
            GateKind::Rx(0.3),
            GateKind::PhasedX { theta: 0.3, phi: -1.2 },
            GateKind::ZZPhase(0.7),
            GateKind::CSwap,
        ];
        for k in kinds {
            assert!(unitarity_defect(&k.matrix().unwrap()) < 1e-14, "{}", k.name());
        }
    }

    #[test]
    fn rejects_invalid_gates() {
        let mut c = Circuit::new(&["a", "b"]).unwrap();
        assert!(matches!(c.push(GateKind::CNOT, &[0], &[]), Err(Error::Addressing(_))));
        assert!(matches!(c.push(GateKind::X, &[0], &[0]), Err(Error::Addressing(_))));
        assert!(matches!(
            c.push(GateKind::Rz(f64::NAN), &[0], &[]),
            Err(Error::Validation(_))
        ));
        let bad = CMat::from_element(2, 2, ONE);
        assert!(matches!(
            c.push(GateKind::Unitary(bad), &[0], &[]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(Circuit::new(&["a", "a"]), Err(Error::NameCollision(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn circuit_then_inverse_is_identity(seed in 0u64..10_000, len in 0usize..30) {
            let c = random_circuit(seed, 3, len);
            let mut both = c.clone();
            both.append(&c.inverse().unwrap()).unwrap();
            prop_assert!(max_abs_diff(&both.unitary_of().unwrap(), &identity(8)) < 1e-10);
        }

        #[test]
        fn gates_preserve_norm(seed in 0u64..10_000, len in 0usize..40) {
            let c = random_circuit(seed, 4, len);
            let s = c.final_state().unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}
