//! Symmetric projected unitary encodings, qubitized walks and the spectral
//! correspondence between a walk and its encoded operator.

mod dual;
mod encodings;

use serde::{Deserialize, Serialize};

use crate::circuit::{Block, Circuit};
use crate::error::{Error, Result};
use crate::numerics::{
    eigenphases, hermitian_eigen, identity, max_abs_diff, max_asymmetry, max_non_hermiticity, phase_distance,
    unitarity_defect, CMat, CVec, Tolerances,
};
use crate::statevector::StateVector;

pub use dual::{dual_walk, DualWalk, DUAL_QUBITS};
pub use encodings::{cswap_encoding, lcu_encoding, lcu_theta, szegedy_encoding};

/// Circuit realization of an isometry: column `x` is `prep |inputs[x]⟩`,
/// and every input has the `ancillas` in `|0⟩`.
#[derive(Debug, Clone)]
pub struct IsometryCircuit {
    pub prep: Block,
    pub inputs: Vec<usize>,
    pub ancillas: Vec<usize>,
}

/// Embedding `□: ℂⁿ → ℋ` stored as an explicit `2^q × n` matrix.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    num_qubits: usize,
    matrix: CMat,
    circuit: Option<IsometryCircuit>,
}

fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

impl PartialIsometry {
    pub fn from_matrix(num_qubits: usize, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                got: matrix.nrows(),
            });
        }
        let defect = max_abs_diff(&(matrix.adjoint() * &matrix), &identity(matrix.ncols()));
        if defect > 1e-10 {
            return Err(Error::Validation(format!(
                "isometry columns are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self {
            num_qubits,
            matrix,
            circuit: None,
        })
    }

    pub fn from_circuit(num_qubits: usize, circuit: IsometryCircuit) -> Result<Self> {
        let dim = 1usize << num_qubits;
        for (i, &s) in circuit.inputs.iter().enumerate() {
            if s >= dim || circuit.inputs[..i].contains(&s) {
                return Err(Error::Validation(format!(
                    "isometry input {s} is out of range or repeated"
                )));
            }
            if circuit.ancillas.iter().any(|&a| bit(s, a, num_qubits) == 1) {
                return Err(Error::Validation(format!("isometry input {s} has an ancilla set")));
            }
        }
        let prep = circuit.prep.unitary(num_qubits)?;
        let cols: Vec<CVec> = circuit.inputs.iter().map(|&s| prep.column(s).into_owned()).collect();
        let matrix = CMat::from_columns(&cols);
        let mut iso = Self::from_matrix(num_qubits, matrix)?;
        iso.circuit = Some(circuit);
        Ok(iso)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn circuit(&self) -> Option<&IsometryCircuit> {
        self.circuit.as_ref()
    }

    /// `□|v⟩` as a state.
    pub fn embed(&self, v: &[f64]) -> Result<StateVector> {
        if v.len() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim(),
                got: v.len(),
            });
        }
        let col = &self.matrix * CVec::from_iterator(v.len(), v.iter().map(|&x| crate::numerics::c64(x, 0.0)));
        StateVector::from_amplitudes(col.iter().copied().collect())
    }

    /// `2□□† − 1`.
    pub fn reflection_matrix(&self) -> CMat {
        (&self.matrix * self.matrix.adjoint()).scale(2.0) - identity(1 << self.num_qubits)
    }

    /// Circuit for `2□□† − 1`, when a realization is attached.
    pub fn reflection_block(&self) -> Option<Block> {
        let c = self.circuit.as_ref()?;
        let n = self.num_qubits;
        let free: Vec<usize> = (0..n).filter(|q| !c.ancillas.contains(q)).collect();
        let core = if c.inputs.len() == 1 << free.len() {
            Block::zero_reflection(&c.ancillas)
        } else {
            let all: Vec<usize> = (0..n).collect();
            Block::basis_reflection(&all, &c.inputs)
        };
        // Time order: prep†, core, prep.
        Some(Block::conjugate(c.prep.inverse().ok()?, core))
    }
}

/// Pair `(U, □)` with a symmetric encoded operator `□†U□`.
#[derive(Debug, Clone)]
pub struct Spue {
    name: String,
    qubits: Vec<String>,
    unitary: CMat,
    unitary_block: Option<Block>,
    isometry: PartialIsometry,
    tolerances: Tolerances,
}

impl Spue {
    pub fn from_matrix<S: AsRef<str>>(
        name: &str,
        qubits: &[S],
        unitary: CMat,
        isometry: PartialIsometry,
    ) -> Result<Self> {
        let qubits: Vec<String> = qubits.iter().map(|q| q.as_ref().to_string()).collect();
        if isometry.num_qubits() != qubits.len() || unitary.nrows() != 1 << qubits.len() {
            return Err(Error::DimensionMismatch {
                expected: 1 << qubits.len(),
                got: unitary.nrows(),
            });
        }
        let tolerances = Tolerances::default();
        let defect = unitarity_defect(&unitary);
        if defect > tolerances.unitary {
            return Err(Error::NotUnitary(format!("encoding unitary defect {defect:e}")));
        }
        if max_asymmetry(&unitary) > tolerances.symmetry {
            log::warn!("{name}: encoding unitary is not symmetric; only the encoded operator is checked");
        }
        let spue = Self {
            name: name.to_string(),
            qubits,
            unitary,
            unitary_block: None,
            isometry,
            tolerances,
        };
        spue.encoded_operator()?;
        Ok(spue)
    }

    pub fn from_block<S: AsRef<str>>(
        name: &str,
        qubits: &[S],
        unitary: Block,
        isometry: PartialIsometry,
    ) -> Result<Self> {
        let u = unitary.unitary(qubits.len())?;
        let mut spue = Self::from_matrix(name, qubits, u, isometry)?;
        spue.unitary_block = Some(unitary);
        Ok(spue)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubits(&self) -> &[String] {
        &self.qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn unitary(&self) -> &CMat {
        &self.unitary
    }

    pub fn unitary_block(&self) -> Option<&Block> {
        self.unitary_block.as_ref()
    }

    pub fn isometry(&self) -> &PartialIsometry {
        &self.isometry
    }

    /// `A = □†U□`, rejected when not symmetric.
    pub fn encoded_operator(&self) -> Result<CMat> {
        let m = self.isometry.matrix();
        let a = m.adjoint() * &self.unitary * m;
        let asymmetry = max_asymmetry(&a).max(max_non_hermiticity(&a));
        if asymmetry > self.tolerances.symmetry {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(a)
    }
}

/// `𝒲 = (2□□† − 1)U`.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    spue: Spue,
    reflection: CMat,
    total: CMat,
}

pub fn walk_operator(spue: &Spue) -> Result<WalkOperator> {
    let reflection = spue.isometry.reflection_matrix();
    let total = &reflection * spue.unitary();
    let defect = unitarity_defect(&total);
    if defect > spue.tolerances.unitary {
        return Err(Error::NotUnitary(format!("walk operator defect {defect:e}")));
    }
    Ok(WalkOperator {
        spue: spue.clone(),
        reflection,
        total,
    })
}

impl WalkOperator {
    pub fn spue(&self) -> &Spue {
        &self.spue
    }

    pub fn matrix(&self) -> &CMat {
        &self.total
    }

    pub fn reflection(&self) -> &CMat {
        &self.reflection
    }

    pub fn num_qubits(&self) -> usize {
        self.spue.num_qubits()
    }

    pub fn qubits(&self) -> &[String] {
        self.spue.qubits()
    }

    /// Gate-level walk (`U` then the reflection), when both parts have circuits.
    pub fn block(&self) -> Option<Block> {
        let u = self.spue.unitary_block()?.clone();
        let r = self.spue.isometry.reflection_block()?;
        Some(Block::Seq(vec![u, r]))
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let block = self
            .block()
            .ok_or_else(|| Error::Unsupported(format!("{} has no circuit realization", self.spue.name)))?;
        let mut c = Circuit::new(self.qubits())?;
        c.push_block(&block)?;
        Ok(c)
    }

    /// Checks that the circuit realization matches the dense walk.
    pub fn verify_circuit(&self) -> Result<f64> {
        let u = self.circuit()?.unitary_of()?;
        Ok(max_abs_diff(&u, &self.total))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    /// Eigenvalue of the encoded operator.
    pub lambda: f64,
    /// `±arccos λ`, or a single phase for `λ = ±1`.
    pub expected_phases: Vec<f64>,
    /// Eigenphases of the walk restricted to `span{□v, U□v}`.
    pub subspace_phases: Vec<f64>,
    /// Nearest unused walk eigenphases from the full spectrum.
    pub matched_phases: Vec<f64>,
    /// Residual of the invariance (or fixed-vector) check.
    pub residual: f64,
    pub max_phase_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub encoding: String,
    pub entries: Vec<SpectralEntry>,
    pub walk_phases: Vec<f64>,
    pub max_error: f64,
    pub tolerance: f64,
    pub violations: Vec<String>,
}

impl SpectralReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies eigenphases `±arccos λ` on `span{□v, U□v}` for every eigenpair
/// `(λ, v)` of the encoded operator, and fixed vectors for `λ = ±1`.
pub fn check_spectral_correspondence(walk: &WalkOperator) -> SpectralReport {
    let tol = 1e-8;
    let mut report = SpectralReport {
        encoding: walk.spue.name.clone(),
        entries: vec![],
        walk_phases: vec![],
        max_error: 0.0,
        tolerance: tol,
        violations: vec![],
    };
    let a = match walk.spue.encoded_operator() {
        Ok(a) => a,
        Err(e) => {
            report.violations.push(e.to_string());
            return report;
        }
    };
    let (values, vectors) = hermitian_eigen(&a);
    let iso = walk.spue.isometry.matrix();
    let w = &walk.total;
    let mut phases = eigenphases(w);
    phases.sort_by(f64::total_cmp);
    let mut used = vec![false; phases.len()];

    for (idx, &lambda) in values.iter().enumerate() {
        let v = vectors.column(idx).into_owned();
        let u0 = iso * &v;
        let is_edge = (lambda.abs() - 1.0).abs() < tol;
        let (expected, subspace, residual) = if is_edge {
            let target = if lambda > 0.0 { 0.0 } else { std::f64::consts::PI };
            let r = (w * &u0 - u0.scale(lambda.signum())).norm();
            (vec![target], vec![target], r)
        } else {
            let u1 = walk.spue.unitary() * &u0;
            let s = (1.0 - lambda * lambda).sqrt();
            let perp = (&u1 - u0.scale(lambda)).unscale(s);
            let basis = CMat::from_columns(&[u0.clone(), perp]);
            let restricted = basis.adjoint() * w * &basis;
            let r = (w * &basis - &basis * &restricted).norm();
            let theta = lambda.clamp(-1.0, 1.0).acos();
            let mut sub = eigenphases(&restricted);
            sub.sort_by(f64::total_cmp);
            (vec![-theta, theta], sub, r)
        };

        let mut err: f64 = 0.0;
        // Restricted eigenphases against expected, pairing both orderings.
        if expected.len() == subspace.len() {
            let direct = expected
                .iter()
                .zip(&subspace)
                .map(|(e, s)| phase_distance(*e, *s))
                .fold(0.0, f64::max);
            let swapped = expected
                .iter()
                .zip(subspace.iter().rev())
                .map(|(e, s)| phase_distance(*e, *s))
                .fold(0.0, f64::max);
            err = err.max(direct.min(swapped));
        }

        let mut matched = Vec::new();
        for &e in &expected {
            let best = (0..phases.len())
                .filter(|&i| !used[i])
                .min_by(|&i, &j| phase_distance(phases[i], e).total_cmp(&phase_distance(phases[j], e)));
            match best {
                Some(i) => {
                    used[i] = true;
                    err = err.max(phase_distance(phases[i], e));
                    matched.push(phases[i]);
                }
                None => {
                    report
                        .violations
                        .push(format!("no unused walk eigenphase left for λ = {lambda:.12}"));
                }
            }
        }
        if residual > tol {
            report.violations.push(format!(
                "λ = {lambda:.12}: invariant-subspace residual {residual:e} exceeds {tol:e}"
            ));
        }
        if err > tol {
            report
                .violations
                .push(format!("λ = {lambda:.12}: phase error {err:e} exceeds {tol:e}"));
        }
        report.max_error = report.max_error.max(err).max(residual);
        report.entries.push(SpectralEntry {
            lambda,
            expected_phases: expected,
            subspace_phases: subspace,
            matched_phases: matched,
            residual,
            max_phase_error: err,
        });
    }
    report.walk_phases = phases;
    report
}
