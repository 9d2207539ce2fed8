//! Stochastic Pauli noise by trajectory sampling.
//!
//! After every gate, with probability `p1` (one qubit) or `p2` (two or more
//! qubits), a uniformly random non-identity Pauli string is applied to the
//! gate's qubits. Measured bits flip with probability `p_meas`.
//!
//! The default rates (`p1 = 2e-5`, `p2 = 1e-3`, `p_meas = 1e-3`) are an
//! order-of-magnitude stand-in for trapped-ion hardware, not calibrated
//! device values.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{transpile_native, Circuit, GateKind};
use crate::error::{Error, Result};
use crate::numerics::CMat;
use crate::statevector::{bitstring, cumulative, draw, shot_rng, Histogram, StateVector, StreamPurpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Attach {
    /// Noise follows each gate of the native transpilation.
    #[default]
    Native,
    /// Noise follows each gate as written.
    Logical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p_meas: f64,
    #[serde(default)]
    pub attach: Attach,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p1: 2e-5,
            p2: 1e-3,
            p_meas: 1e-3,
            attach: Attach::Native,
        }
    }
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, p_meas: f64, attach: Attach) -> Result<Self> {
        let m = Self { p1, p2, p_meas, attach };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            p_meas: 0.0,
            attach: Attach::Native,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2), ("p_meas", self.p_meas)] {
            if !(0.0..1.0).contains(&p) && p != 1.0 {
                return Err(Error::Domain(format!("{name} must lie in [0, 1), got {p}")));
            }
            if p == 1.0 && name == "p_meas" {
                return Err(Error::Domain("p_meas must be below 1".into()));
            }
        }
        if self.p2 < self.p1 {
            log::warn!(
                "two-qubit error rate {} is below the single-qubit rate {}",
                self.p2,
                self.p1
            );
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct")
    }

    pub fn is_zero(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_meas == 0.0
    }

    fn rate(&self, qubits: usize) -> f64 {
        match qubits {
            0 => 0.0,
            1 => self.p1,
            _ => self.p2,
        }
    }
}

/// One inserted error: op index and Pauli string (one letter per qubit of the gate).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Insertion {
    pub op: usize,
    pub qubits: Vec<usize>,
    pub pauli: String,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: StateVector,
    pub insertions: Vec<Insertion>,
}

const PAULI: [char; 4] = ['I', 'X', 'Y', 'Z'];

fn pauli_matrix(c: char) -> CMat {
    match c {
        'X' => GateKind::X.matrix(),
        'Y' => GateKind::Y.matrix(),
        'Z' => GateKind::Z.matrix(),
        _ => GateKind::Rz(0.0).matrix(),
    }
    .expect("unitary")
}

/// Draws the gate errors of one shot.
fn draw_insertions<R: Rng>(circuit: &Circuit, model: &NoiseModel, rng: &mut R) -> Vec<Insertion> {
    let mut out = Vec::new();
    for (i, g) in circuit.ops().iter().enumerate() {
        if matches!(g.kind, GateKind::Measure | GateKind::Reset) {
            continue;
        }
        let qubits: Vec<usize> = g.qubits().collect();
        let p = model.rate(qubits.len());
        if p > 0.0 && rng.random::<f64>() < p {
            let k = qubits.len() as u32;
            let index = rng.random_range(1..4usize.pow(k));
            let pauli = (0..k as usize)
                .map(|j| PAULI[(index >> (2 * (k as usize - 1 - j))) & 3])
                .collect();
            out.push(Insertion { op: i, qubits, pauli });
        }
    }
    out
}

/// Runs `ops[start..]` on `state`, inserting the Paulis of `insertions`
/// (all at or after `start`).
fn run_from(
    circuit: &Circuit,
    matrices: &[Option<CMat>],
    mut state: StateVector,
    start: usize,
    insertions: &[Insertion],
) -> StateVector {
    let mut next = insertions.iter().peekable();
    for (i, g) in circuit.ops().iter().enumerate().skip(start) {
        if let Some(m) = &matrices[i] {
            state.apply_matrix_unchecked(&g.targets, &g.controls, m);
        }
        while let Some(ins) = next.next_if(|ins| ins.op == i) {
            for (q, c) in ins.qubits.iter().zip(ins.pauli.chars()) {
                if c != 'I' {
                    state.apply_matrix_unchecked(&[*q], &[], &pauli_matrix(c));
                }
            }
        }
    }
    state
}

fn gate_matrices(circuit: &Circuit) -> Vec<Option<CMat>> {
    circuit.ops().iter().map(|g| g.kind.matrix()).collect()
}

fn check_executable(circuit: &Circuit) -> Result<()> {
    if circuit.has_mid_circuit_operations() {
        return Err(Error::Unsupported(
            "noisy execution supports terminal measurements only".into(),
        ));
    }
    Ok(())
}

/// State of one noisy trajectory, deterministic per `(seed, shot)`.
pub fn apply_trajectory(circuit: &Circuit, model: &NoiseModel, seed: u64, shot: u64) -> Result<Trajectory> {
    check_executable(circuit)?;
    let mut rng = shot_rng(seed, shot, StreamPurpose::Noise);
    let insertions = draw_insertions(circuit, model, &mut rng);
    let state = run_from(
        circuit,
        &gate_matrices(circuit),
        StateVector::zero(circuit.num_qubits())?,
        0,
        &insertions,
    );
    Ok(Trajectory { state, insertions })
}

/// Shot executor: noise is drawn per shot, trajectories without errors
/// reuse the noiseless final state.
pub struct NoisyExecutor {
    circuit: Circuit,
    model: NoiseModel,
    matrices: Vec<Option<CMat>>,
    /// Ideal state before each op, when small enough to keep.
    prefix: OnceLock<Option<Vec<StateVector>>>,
    ideal: OnceLock<StateVector>,
}

/// Amplitude budget for prefix caching.
const PREFIX_BUDGET: usize = 1 << 24;

impl NoisyExecutor {
    pub fn new(circuit: &Circuit, model: &NoiseModel) -> Result<Self> {
        model.validate()?;
        let unitary_part = circuit.without_measurements();
        check_executable(&unitary_part)?;
        let circuit = match model.attach {
            Attach::Native if !model.is_zero() => transpile_native(&unitary_part)?,
            _ => unitary_part,
        };
        Ok(Self {
            matrices: gate_matrices(&circuit),
            circuit,
            model: *model,
            prefix: OnceLock::new(),
            ideal: OnceLock::new(),
        })
    }

    /// Circuit the noise is attached to.
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    fn ideal(&self) -> Result<&StateVector> {
        if let Some(s) = self.ideal.get() {
            return Ok(s);
        }
        let zero = StateVector::zero(self.circuit.num_qubits())?;
        let s = run_from(&self.circuit, &self.matrices, zero, 0, &[]);
        Ok(self.ideal.get_or_init(|| s))
    }

    fn prefix(&self) -> Result<Option<&[StateVector]>> {
        if let Some(p) = self.prefix.get() {
            return Ok(p.as_deref());
        }
        let n = self.circuit.num_qubits();
        let ops = self.circuit.len();
        let cached = if (ops + 1) << n <= PREFIX_BUDGET {
            let mut states = Vec::with_capacity(ops);
            let mut state = StateVector::zero(n)?;
            for (i, g) in self.circuit.ops().iter().enumerate() {
                states.push(state.clone());
                if let Some(m) = &self.matrices[i] {
                    state.apply_matrix_unchecked(&g.targets, &g.controls, m);
                }
            }
            Some(states)
        } else {
            None
        };
        Ok(self.prefix.get_or_init(|| cached).as_deref())
    }

    /// Final state of one trajectory with the given errors.
    fn trajectory(&self, insertions: &[Insertion]) -> Result<StateVector> {
        let start = insertions.first().map_or(self.circuit.len(), |i| i.op);
        Ok(match self.prefix()? {
            Some(p) if start < p.len() => run_from(&self.circuit, &self.matrices, p[start].clone(), start, insertions),
            _ => run_from(
                &self.circuit,
                &self.matrices,
                StateVector::zero(self.circuit.num_qubits())?,
                0,
                insertions,
            ),
        })
    }

    /// Histogram over the listed qubits (first listed is the leftmost bit).
    pub fn sample(&self, qubits: &[usize], shots: u64, seed: u64) -> Result<Histogram> {
        let ideal = self.ideal()?;
        if self.model.is_zero() {
            return ideal.sample(qubits, shots, seed);
        }
        let ideal_cdf = cumulative(&ideal.marginal_probabilities(qubits)?);
        let k = qubits.len();
        let outcomes: Vec<usize> = (0..shots)
            .into_par_iter()
            .map(|shot| -> Result<usize> {
                let mut noise_rng = shot_rng(seed, shot, StreamPurpose::Noise);
                let insertions = draw_insertions(&self.circuit, &self.model, &mut noise_rng);
                let mut rng = shot_rng(seed, shot, StreamPurpose::Sample);
                let u = rng.random::<f64>();
                let mut outcome = if insertions.is_empty() {
                    draw(&ideal_cdf, u)
                } else {
                    let state = self.trajectory(&insertions)?;
                    draw(&cumulative(&state.marginal_probabilities(qubits)?), u)
                };
                for b in 0..k {
                    if self.model.p_meas > 0.0 && noise_rng.random::<f64>() < self.model.p_meas {
                        outcome ^= 1 << (k - 1 - b);
                    }
                }
                Ok(outcome)
            })
            .collect::<Result<_>>()?;
        let mut hist = Histogram::new();
        for o in outcomes {
            *hist.entry(bitstring(o, k)).or_insert(0) += 1;
        }
        Ok(hist)
    }
}
