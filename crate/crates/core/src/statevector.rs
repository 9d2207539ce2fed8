//! Dense complex statevector simulator.
//!
//! Qubit `0` is the most significant bit of the basis-state index, so the
//! bit string of an index lists qubits in register order from left to right.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{unitarity_defect, CMat, ONE, ZERO};

pub const MAX_QUBITS: usize = 16;

/// Outcome bit string → count.
pub type Histogram = BTreeMap<String, u64>;

/// Independent random stream for one shot.
///
/// Streams are keyed by `(seed, shot, purpose)` so that results do not depend
/// on the order in which shots are evaluated.
pub fn shot_rng(seed: u64, shot: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Sample = 0,
    Noise = 1,
    MidCircuit = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Result of a projective single-qubit measurement.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcome: u8,
    pub probability: f64,
    pub remaining_state: StateVector,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::Addressing(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps amplitudes that must already have unit norm (within 1e-10).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Validation(format!(
                "amplitude count {dim} is not a power of two ≥ 2"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_qubit_count(num_qubits)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("state norm² is {norm}, expected 1")));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Normalises arbitrary non-zero amplitudes.
    pub fn from_unnormalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Validation("cannot normalise a zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ other`, with `self` on the leading (more significant) qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        check_qubit_count(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    fn bit_position(&self, qubit: usize) -> usize {
        self.num_qubits - 1 - qubit
    }

    /// Applies a `2^k × 2^k` unitary to `targets`, conditioned on every qubit
    /// in `controls` being `|1⟩`. The first target is the most significant
    /// bit of the matrix index.
    pub fn apply_matrix(&mut self, targets: &[usize], controls: &[usize], m: &CMat) -> Result<()> {
        self.check_addressing(targets, controls)?;
        let k = targets.len();
        if m.nrows() != 1 << k || m.ncols() != 1 << k {
            return Err(Error::Validation(format!(
                "matrix is {}x{} but {} target(s) need {}x{}",
                m.nrows(),
                m.ncols(),
                k,
                1 << k,
                1 << k
            )));
        }
        let defect = unitarity_defect(m);
        if defect > 1e-10 {
            return Err(Error::Validation(format!("matrix is not unitary (defect {defect:e})")));
        }
        self.apply_matrix_unchecked(targets, controls, m);
        Ok(())
    }

    pub(crate) fn check_addressing(&self, targets: &[usize], controls: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.num_qubits];
        for &q in targets.iter().chain(controls) {
            if q >= self.num_qubits {
                return Err(Error::Addressing(format!(
                    "qubit {q} out of range (state has {})",
                    self.num_qubits
                )));
            }
            if seen[q] {
                return Err(Error::Addressing(format!("qubit {q} addressed twice")));
            }
            seen[q] = true;
        }
        Ok(())
    }

    /// Kernel behind [`apply_matrix`](Self::apply_matrix); inputs must be valid.
    pub(crate) fn apply_matrix_unchecked(&mut self, targets: &[usize], controls: &[usize], m: &CMat) {
        apply_to_amplitudes(&mut self.amps, self.num_qubits, targets, controls, m);
    }

    /// Applies a gate from the circuit IR (measure/reset are rejected).
    pub fn apply_gate(&mut self, gate: &crate::circuit::Gate) -> Result<()> {
        let m = gate
            .kind
            .matrix()
            .ok_or_else(|| Error::NotUnitary(format!("{} is not a unitary gate", gate.kind.name())))?;
        self.apply_matrix(&gate.targets, &gate.controls, &m)
    }

    /// Probability that `qubit` reads `1`.
    pub fn probability_one(&self, qubit: usize) -> f64 {
        let bit = 1 << self.bit_position(qubit);
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Born distribution of the listed qubits; outcome index is read with the
    /// first listed qubit as the most significant bit.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_addressing(qubits, &[])?;
        let k = qubits.len();
        let mut probs = vec![0.0; 1 << k];
        let positions: Vec<usize> = qubits.iter().map(|&q| self.bit_position(q)).collect();
        for (i, a) in self.amps.iter().enumerate() {
            let mut idx = 0usize;
            for &pos in &positions {
                idx = (idx << 1) | ((i >> pos) & 1);
            }
            probs[idx] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Samples `shots` outcomes of the listed qubits. Shot `i` draws from its
    /// own stream, so the histogram is fixed by `seed` alone.
    pub fn sample(&self, qubits: &[usize], shots: u64, seed: u64) -> Result<Histogram> {
        let probs = self.marginal_probabilities(qubits)?;
        let cdf = cumulative(&probs);
        let k = qubits.len();
        let outcomes: Vec<usize> = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = shot_rng(seed, shot, StreamPurpose::Sample);
                draw(&cdf, rng.random::<f64>())
            })
            .collect();
        let mut hist = Histogram::new();
        for o in outcomes {
            *hist.entry(bitstring(o, k)).or_insert(0) += 1;
        }
        Ok(hist)
    }

    /// Conditional state given `qubit` reads `value`, with that branch's
    /// Born probability.
    pub fn post_select(&self, qubit: usize, value: u8) -> Result<(StateVector, f64)> {
        self.check_addressing(&[qubit], &[])?;
        let bit = 1 << self.bit_position(qubit);
        let want = if value == 0 { 0 } else { bit };
        let mut amps = self.amps.clone();
        let mut prob = 0.0;
        for (i, a) in amps.iter_mut().enumerate() {
            if i & bit == want {
                prob += a.norm_sqr();
            } else {
                *a = ZERO;
            }
        }
        if prob <= 1e-12 {
            return Err(Error::PostSelectImpossible { probability: prob });
        }
        let scale = prob.sqrt();
        amps.iter_mut().for_each(|a| *a /= scale);
        Ok((
            StateVector {
                num_qubits: self.num_qubits,
                amps,
            },
            prob,
        ))
    }

    /// Projective measurement of one qubit using `rng`.
    pub fn measure<R: Rng + ?Sized>(&self, qubit: usize, rng: &mut R) -> Result<MeasurementRecord> {
        let p1 = self.probability_one(qubit);
        let outcome = u8::from(rng.random::<f64>() < p1);
        let (remaining_state, probability) = self.post_select(qubit, outcome)?;
        Ok(MeasurementRecord {
            outcome,
            probability,
            remaining_state,
        })
    }

    /// Measures `qubit` and flips it back to `|0⟩` if needed.
    pub fn reset<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<()> {
        let record = self.measure(qubit, rng)?;
        *self = record.remaining_state;
        if record.outcome == 1 {
            let x = crate::circuit::GateKind::X.matrix().expect("X is unitary");
            self.apply_matrix_unchecked(&[qubit], &[], &x);
        }
        Ok(())
    }

    /// Discards the listed qubits, which must be in a product basis state with
    /// the rest, returning the state of the remaining qubits.
    pub fn drop_qubits(&self, qubits: &[usize]) -> Result<StateVector> {
        self.check_addressing(qubits, &[])?;
        let keep: Vec<usize> = (0..self.num_qubits).filter(|q| !qubits.contains(q)).collect();
        if keep.is_empty() {
            return Err(Error::Validation("cannot drop every qubit".into()));
        }
        let removed_probs = self.marginal_probabilities(qubits)?;
        let (idx, p) = removed_probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if (p - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "dropped qubits are not in a definite basis state (max probability {p})"
            )));
        }
        let mut amps = vec![ZERO; 1 << keep.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut dropped = 0usize;
            for &q in qubits {
                dropped = (dropped << 1) | ((i >> self.bit_position(q)) & 1);
            }
            if dropped != idx {
                continue;
            }
            let mut kept = 0usize;
            for &q in &keep {
                kept = (kept << 1) | ((i >> self.bit_position(q)) & 1);
            }
            amps[kept] = *a;
        }
        StateVector::from_unnormalized(amps)
    }
}

/// Applies `m` to `targets` of an `n`-qubit amplitude array, conditioned on
/// `controls`. Inputs are not validated.
pub(crate) fn apply_to_amplitudes(amps: &mut [Complex64], n: usize, targets: &[usize], controls: &[usize], m: &CMat) {
    let k = targets.len();
    let ctrl_mask = controls.iter().fold(0usize, |acc, &q| acc | (1 << (n - 1 - q)));
    if k == 0 {
        let phase = m[(0, 0)];
        for (i, a) in amps.iter_mut().enumerate() {
            if i & ctrl_mask == ctrl_mask {
                *a *= phase;
            }
        }
        return;
    }
    let target_bits: Vec<usize> = targets.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let target_mask = target_bits.iter().fold(0, |acc, b| acc | b);
    let sub = 1usize << k;
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            (0..k)
                .filter(|j| s >> (k - 1 - j) & 1 == 1)
                .fold(0, |acc, j| acc | target_bits[j])
        })
        .collect();
    if k == 1 {
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let bit = target_bits[0];
        for i in 0..amps.len() {
            if i & bit != 0 || i & ctrl_mask != ctrl_mask {
                continue;
            }
            let a0 = amps[i];
            let a1 = amps[i | bit];
            amps[i] = m00 * a0 + m01 * a1;
            amps[i | bit] = m10 * a0 + m11 * a1;
        }
        return;
    }
    let mut buf = vec![ZERO; sub];
    for i in 0..amps.len() {
        if i & target_mask != 0 || i & ctrl_mask != ctrl_mask {
            continue;
        }
        for (s, off) in offsets.iter().enumerate() {
            buf[s] = amps[i | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (s, b) in buf.iter().enumerate() {
                acc += m[(r, s)] * b;
            }
            amps[i | off] = acc;
        }
    }
}

/// Inner product `⟨a|b⟩`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: a.num_qubits,
            got: b.num_qubits,
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Validation(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Inverse-CDF draw; the final bucket absorbs rounding in the total.
pub(crate) fn draw(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let target = u * total;
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Bit string of `value` using `width` bits, most significant first.
pub fn bitstring(value: usize, width: usize) -> String {
    (0..width)
        .rev()
        .map(|b| if value >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Gate, GateKind};
    use crate::numerics::c64;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::new(GateKind::H, vec![0], vec![])).unwrap();
        assert_abs_diff_eq!(s.amplitude(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn ry_angle_reconciliation() {
        // Amplitude angle θ = arccos √(1-δ); the applied gate is R_Y(2θ).
        let delta: f64 = 0.25;
        let theta = (1.0 - delta).sqrt().acos();
        assert_abs_diff_eq!(theta, std::f64::consts::PI / 6.0, epsilon = 1e-15);
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::new(GateKind::Ry(2.0 * theta), vec![0], vec![]))
            .unwrap();
        assert_abs_diff_eq!(s.amplitude(0).re, 0.75f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cnot_makes_bell_state() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_gate(&Gate::new(GateKind::H, vec![0], vec![])).unwrap();
        s.apply_gate(&Gate::new(GateKind::CNOT, vec![0, 1], vec![])).unwrap();
        let p = s.probabilities();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1] + p[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn addressing_errors() {
        let mut s = StateVector::zero(2).unwrap();
        let x = GateKind::X.matrix().unwrap();
        assert!(matches!(s.apply_matrix(&[2], &[], &x), Err(Error::Addressing(_))));
        assert!(matches!(s.apply_matrix(&[0], &[0], &x), Err(Error::Addressing(_))));
        let bad = CMat::from_element(2, 2, c64(1.0, 0.0));
        assert!(matches!(s.apply_matrix(&[0], &[], &bad), Err(Error::Validation(_))));
    }

    #[test]
    fn sample_is_deterministic_and_binomial() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::new(GateKind::H, vec![0], vec![])).unwrap();
        let h1 = s.sample(&[0], 10_000, 11).unwrap();
        let h2 = s.sample(&[0], 10_000, 11).unwrap();
        assert_eq!(h1, h2);
        let zeros = h1["0"] as f64;
        assert!((zeros - 5000.0).abs() <= 150.0, "zeros = {zeros}");
        assert_eq!(h1.values().sum::<u64>(), 10_000);
    }

    #[test]
    fn post_select_edge_cases() {
        let zero = StateVector::zero(1).unwrap();
        let (same, p) = zero.post_select(0, 0).unwrap();
        assert_eq!(same, zero);
        assert_abs_diff_eq!(p, 1.0);
        let one = StateVector::basis(1, 1).unwrap();
        assert!(matches!(one.post_select(0, 0), Err(Error::PostSelectImpossible { .. })));
    }

    #[test]
    fn overlap_values() {
        let a = StateVector::basis(2, 1).unwrap();
        let b = StateVector::basis(2, 2).unwrap();
        assert_eq!(overlap(&a, &a).unwrap(), ONE);
        assert_eq!(overlap(&a, &b).unwrap(), ZERO);
        let c = StateVector::zero(1).unwrap();
        assert!(matches!(overlap(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn marginal_ordering_follows_listed_qubits() {
        // |01⟩: qubit 0 is 0, qubit 1 is 1.
        let s = StateVector::basis(2, 1).unwrap();
        assert_eq!(s.marginal_probabilities(&[0, 1]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.marginal_probabilities(&[1, 0]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(bitstring(1, 2), "01");
    }

    #[test]
    fn drop_qubits_extracts_register() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply_gate(&Gate::new(GateKind::H, vec![2], vec![])).unwrap();
        let r = s.drop_qubits(&[0, 1]).unwrap();
        assert_eq!(r.num_qubits(), 1);
        assert_abs_diff_eq!(r.amplitude(1).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(s.drop_qubits(&[2]).is_err());
    }
}
