//! Phase estimation, eigenstate filtering of qubitized walks, and amplitude
//! estimation of stationary means.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::circuit::{Block, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::numerics::{c64, identity, CMat, CVec};
use crate::spue::WalkOperator;
use crate::statevector::{bitstring, StateVector};

/// Tabulated `f: 𝕊 → [0, 1]` with its oracle
/// `O_f|x,0⟩ = √f(x)|x,0⟩ + √(1−f(x))|x,1⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionOracle {
    values: Vec<f64>,
}

impl FunctionOracle {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain("f needs at least two states".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("f takes values in [0, 1], got {v}")));
        }
        Ok(Self { values })
    }

    /// `δ_x` on `n` states.
    pub fn indicator(n: usize, x: usize) -> Result<Self> {
        if x >= n {
            return Err(Error::Domain(format!("state {x} outside 0..{n}")));
        }
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        Self::new(v)
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_state_qubits(&self) -> usize {
        self.values.len().next_power_of_two().trailing_zeros() as usize
    }

    /// Rotation angle loading `√f(x)` on the flag.
    fn angle(&self, x: usize) -> f64 {
        2.0 * self.values[x].sqrt().clamp(0.0, 1.0).acos()
    }

    /// Multiplexed `R_Y` on `flag`, one branch per state value.
    pub fn block(&self, state: &[usize], flag: usize) -> Block {
        let mut parts = Vec::new();
        for x in 0..self.values.len() {
            let angle = self.angle(x);
            if angle.abs() > 1e-15 {
                parts.push(Block::on_value(state, x, GateKind::Ry(angle), &[flag]));
            }
        }
        Block::Seq(parts)
    }

    /// Oracle matrix over `[state…, flag]`.
    pub fn matrix(&self) -> Result<CMat> {
        let m = self.num_state_qubits();
        let state: Vec<usize> = (0..m).collect();
        self.block(&state, m).unitary(m + 1)
    }
}

/// Measured phase-register counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseEstimate {
    pub t: usize,
    /// Counts per `k ∈ 0..2^t`.
    pub histogram: BTreeMap<usize, u64>,
    pub shots: u64,
}

impl PhaseEstimate {
    fn from_probabilities(t: usize, probs: &[f64], shots: u64, seed: u64) -> Result<Self> {
        let state = StateVector::from_amplitudes(probs.iter().map(|p| c64(p.max(0.0).sqrt(), 0.0)).collect())?;
        let all: Vec<usize> = (0..t).collect();
        let raw = state.sample(&all, shots, seed)?;
        let histogram = raw
            .into_iter()
            .map(|(bits, n)| (usize::from_str_radix(&bits, 2).expect("binary outcome"), n))
            .collect();
        Ok(Self { t, histogram, shots })
    }

    /// Phase `k / 2^t` for every observed `k`.
    pub fn phases(&self) -> BTreeMap<usize, f64> {
        let scale = (1usize << self.t) as f64;
        self.histogram.keys().map(|&k| (k, k as f64 / scale)).collect()
    }
}

/// Appends textbook phase estimation to `circuit`: `phase[b]` (written
/// `j_b`) controls `U^{2^b}`, followed by a swap-free inverse QFT.
///
/// The readout is `k = Σ_b j_b · 2^{t−1−b}`, so with the register listed as
/// `j_{t−1} … j_0` bitstrings read `k` with its least significant bit first.
pub fn append_phase_estimation(circuit: &mut Circuit, unitary: &Block, phase: &[usize]) -> Result<()> {
    let t = phase.len();
    if t == 0 {
        return Err(Error::Domain("phase estimation needs t ≥ 1".into()));
    }
    for &q in phase {
        circuit.push(GateKind::H, &[q], &[])?;
    }
    for (b, &q) in phase.iter().enumerate() {
        circuit.push_block(&unitary.controlled(q)?.repeat(1 << b))?;
    }
    append_inverse_qft(circuit, phase)
}

fn append_inverse_qft(circuit: &mut Circuit, phase: &[usize]) -> Result<()> {
    let t = phase.len();
    for b in (0..t).rev() {
        for bp in b + 1..t {
            let angle = -2.0 * PI / (1u64 << (bp - b + 1)) as f64;
            circuit.push(GateKind::Phase(angle), &[phase[b]], &[phase[bp]])?;
        }
        circuit.push(GateKind::H, &[phase[b]], &[])?;
    }
    Ok(())
}

/// `k` from the bits of `j_0 … j_{t−1}` as read from a basis index.
pub fn phase_readout(bits_by_j: &[u8]) -> usize {
    let t = bits_by_j.len();
    bits_by_j
        .iter()
        .enumerate()
        .map(|(b, &bit)| (bit as usize) << (t - 1 - b))
        .sum()
}

/// Exact QPE outcome distribution using matrix powers of `u`.
pub fn phase_distribution(u: &CMat, input: &StateVector, t: usize) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::Domain("phase estimation needs t ≥ 1".into()));
    }
    let n = input.num_qubits();
    if u.nrows() != input.dim() {
        return Err(Error::DimensionMismatch {
            expected: input.dim(),
            got: u.nrows(),
        });
    }
    // Phase qubits first, listed j_0 … j_{t−1}.
    let mut state = StateVector::zero(t)?.tensor(input)?;
    let system: Vec<usize> = (t..t + n).collect();
    let h = GateKind::H.matrix().expect("unitary");
    for b in 0..t {
        state.apply_matrix(&[b], &[], &h)?;
    }
    let mut power = u.clone();
    for b in 0..t {
        state.apply_matrix(&system, &[b], &power)?;
        power = &power * &power;
    }
    let mut c = Circuit::new(&(0..t + n).map(|i| format!("q{i}")).collect::<Vec<_>>())?;
    append_inverse_qft(&mut c, &(0..t).collect::<Vec<_>>())?;
    c.apply_unitary_part(&mut state)?;
    // Listing j_0 first makes the marginal index equal k.
    state.marginal_probabilities(&(0..t).collect::<Vec<_>>())
}

/// Dense-mode phase estimation with `shots` samples of the readout.
pub fn phase_estimation(u: &CMat, input: &StateVector, t: usize, shots: u64, seed: u64) -> Result<PhaseEstimate> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    let probs = phase_distribution(u, input, t)?;
    PhaseEstimate::from_probabilities(t, &probs, shots, seed)
}

/// Circuit-mode counterpart of [`phase_distribution`] for a gate-level walk.
pub fn phase_distribution_circuit(unitary: &Block, input: &StateVector, t: usize) -> Result<Vec<f64>> {
    let n = input.num_qubits();
    let mut names: Vec<String> = (0..t).map(|b| format!("j{b}")).collect();
    names.extend((0..n).map(|i| format!("s{i}")));
    let mut c = Circuit::new(&names)?;
    let shifted: Vec<usize> = (t..t + n).collect();
    append_phase_estimation(&mut c, &unitary.remap(&shifted), &(0..t).collect::<Vec<_>>())?;
    let mut state = StateVector::zero(t)?.tensor(input)?;
    c.apply_unitary_part(&mut state)?;
    state.marginal_probabilities(&(0..t).collect::<Vec<_>>())
}

/// Eigenstate filter: `H_c`, controlled `𝒲^power`, `H_c`, keep `c = 0`.
///
/// Returns the conditional state on the walk register and the success
/// probability.
pub fn prepare_stationary(walk: &WalkOperator, initial: &StateVector, power: usize) -> Result<(StateVector, f64)> {
    let n = walk.num_qubits();
    if initial.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: initial.num_qubits(),
        });
    }
    let mut state = StateVector::zero(1)?.tensor(initial)?;
    let h = GateKind::H.matrix().expect("unitary");
    state.apply_matrix(&[0], &[], &h)?;
    let wp = walk.matrix().pow(power as u32);
    state.apply_matrix(&(1..=n).collect::<Vec<_>>(), &[0], &wp)?;
    state.apply_matrix(&[0], &[], &h)?;
    let (selected, p) = state.post_select(0, 0)?;
    Ok((selected.drop_qubits(&[0])?, p))
}

/// Gate-level state preparation over `["c", walk qubits…]`, unmeasured.
pub fn state_prep_circuit(walk: &WalkOperator, power: usize, initial: Option<&Block>) -> Result<Circuit> {
    let block = walk
        .block()
        .ok_or_else(|| Error::Unsupported("walk has no circuit realization".into()))?;
    let n = walk.num_qubits();
    let mut names = vec!["c".to_string()];
    names.extend(walk.qubits().iter().cloned());
    let mut c = Circuit::new(&names)?;
    let shift: Vec<usize> = (1..=n).collect();
    if let Some(init) = initial {
        c.push_block(&init.remap(&shift))?;
    }
    c.h(0)?;
    c.push_block(&block.remap(&shift).controlled(0)?.repeat(power))?;
    c.h(0)?;
    Ok(c)
}

/// `Ê = (cos(2πk/2^t) + 1) / 2`.
pub fn mean_estimate(k: usize, t: usize) -> f64 {
    let phase = 2.0 * PI * k as f64 / (1u64 << t) as f64;
    (phase.cos() + 1.0) / 2.0
}

/// Stable text label for an estimate, rounded to 1e-12.
pub fn estimate_label(e: f64) -> String {
    let r = (e * 1e12).round() / 1e12;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

/// Histogram of mean estimates from amplitude estimation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub phase: PhaseEstimate,
    /// Counts keyed by [`estimate_label`].
    pub estimates: BTreeMap<String, u64>,
    /// Exact Born probability of each estimate.
    pub probabilities: BTreeMap<String, f64>,
}

impl MeanEstimate {
    fn new(phase: PhaseEstimate, probs: &[f64]) -> Self {
        let t = phase.t;
        let mut estimates = BTreeMap::new();
        for (&k, &n) in &phase.histogram {
            *estimates.entry(estimate_label(mean_estimate(k, t))).or_insert(0) += n;
        }
        let mut probabilities = BTreeMap::new();
        for (k, &p) in probs.iter().enumerate() {
            if p > 1e-15 {
                *probabilities.entry(estimate_label(mean_estimate(k, t))).or_insert(0.0) += p;
            }
        }
        Self {
            phase,
            estimates,
            probabilities,
        }
    }
}

/// `|π·f⟩ = O_f |π, 0⟩`, with the oracle on the trailing qubits of
/// `pi_state` and the flag appended last.
pub fn pi_f_state(pi_state: &StateVector, oracle: &FunctionOracle) -> Result<StateVector> {
    let m = oracle.num_state_qubits();
    let n = pi_state.num_qubits();
    if m > n {
        return Err(Error::DimensionMismatch { expected: m, got: n });
    }
    let mut s = pi_state.tensor(&StateVector::zero(1)?)?;
    let targets: Vec<usize> = (n - m..=n).collect();
    s.apply_matrix(&targets, &[], &oracle.matrix()?)?;
    Ok(s)
}

/// Walk `Z_f · (2|π·f⟩⟨π·f| − 1)` of the reflection encoding with isometry `|0⟩_f`.
pub fn reflection_walk_matrix(pi_f: &StateVector) -> CMat {
    let v = CVec::from_column_slice(pi_f.amplitudes());
    let dim = v.len();
    let reflection = (&v * v.adjoint()).scale(2.0) - identity(dim);
    let mut z = identity(dim);
    for i in (1..dim).step_by(2) {
        z[(i, i)] = -z[(i, i)];
    }
    z * reflection
}

/// `2⟨0|π·f⟩⟨π·f|0⟩ − 1` on the registers other than the flag.
pub fn reflection_encoded_operator(pi_f: &StateVector) -> CMat {
    let amps = pi_f.amplitudes();
    let w = CVec::from_iterator(amps.len() / 2, amps.iter().step_by(2).copied());
    (&w * w.adjoint()).scale(2.0) - identity(w.len())
}

/// Amplitude estimation of `E_π f` by phase-estimating the reflection walk
/// on `|π·f⟩` with `t` bits.
pub fn qae_mean(
    pi_state: &StateVector,
    oracle: &FunctionOracle,
    t: usize,
    shots: u64,
    seed: u64,
) -> Result<MeanEstimate> {
    if t < 1 {
        return Err(Error::Domain("t must be at least 1".into()));
    }
    let pi_f = pi_f_state(pi_state, oracle)?;
    let walk = reflection_walk_matrix(&pi_f);
    let probs = phase_distribution(&walk, &pi_f, t)?;
    let phase = PhaseEstimate::from_probabilities(t, &probs, shots, seed)?;
    Ok(MeanEstimate::new(phase, &probs))
}

/// Gate-level reflection walk `Z_flag · prep (2|0⟩⟨0| − 1) prep†` over `system`.
pub fn reflection_walk_block(prep: &Block, system: &[usize], flag: usize) -> Result<Block> {
    let reflection = Block::conjugate(prep.inverse()?, Block::zero_reflection(system));
    Ok(Block::Seq(vec![
        reflection,
        Block::ops(vec![Gate::new(GateKind::Z, vec![flag], vec![])]),
    ]))
}

/// Bits of `index` (over `n` qubits) at the listed positions.
pub fn bits_at(index: usize, n: usize, qubits: &[usize]) -> Vec<u8> {
    qubits.iter().map(|&q| ((index >> (n - 1 - q)) & 1) as u8).collect()
}

/// Readout histogram keyed by `k`, from bitstrings of a register listed `j_0 … j_{t−1}`.
pub fn readout_label(bits_by_j: &[u8]) -> String {
    bitstring(phase_readout(bits_by_j), bits_by_j.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::Distribution;
    use crate::numerics::{hermitian_eigen, max_abs_diff};
    use crate::spue::{lcu_encoding, walk_operator};
    use proptest::prelude::*;

    fn uniform_pi() -> StateVector {
        let amps = Distribution::uniform(2).coherent_amplitudes();
        StateVector::from_amplitudes(amps.into_iter().map(|a| c64(a, 0.0)).collect()).unwrap()
    }

    #[test]
    fn oracle_contract() {
        let o = FunctionOracle::new(vec![0.1, 0.7, 1.0, 0.0]).unwrap();
        let m = o.matrix().unwrap();
        for (x, f) in o.values().iter().enumerate() {
            assert!((m[(2 * x, 2 * x)].re - f.sqrt()).abs() < 1e-10);
            assert!((m[(2 * x + 1, 2 * x)].re - (1.0 - f).sqrt()).abs() < 1e-10);
        }
        assert!(FunctionOracle::new(vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn qpe_of_z() {
        let z = GateKind::Z.matrix().unwrap();
        let est = phase_estimation(&z, &StateVector::basis(1, 1).unwrap(), 1, 100, 1).unwrap();
        assert_eq!(est.histogram, BTreeMap::from([(1, 100)]));
        assert_eq!(est.phases()[&1], 0.5);
    }

    #[test]
    fn qpe_dirichlet_kernel() {
        let phi = 1.0 / 3.0;
        let u = CMat::from_element(1, 1, num_complex::Complex64::from_polar(1.0, 2.0 * PI * phi));
        let u = crate::numerics::kron(&u, &identity(2));
        let input = StateVector::zero(1).unwrap();
        let t = 2;
        let probs = phase_distribution(&u, &input, t).unwrap();
        let size = 4.0;
        for (k, p) in probs.iter().enumerate() {
            let amp: num_complex::Complex64 = (0..4)
                .map(|j| num_complex::Complex64::from_polar(1.0 / size, 2.0 * PI * j as f64 * (phi - k as f64 / size)))
                .sum();
            assert!((amp.norm_sqr() - p).abs() < 1e-12, "k = {k}");
        }
        let peak = (0..4).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap();
        assert_eq!(peak, 1);
    }

    #[test]
    fn qpe_fixed_point_of_lcu_walk() {
        let walk = walk_operator(&lcu_encoding(0.25).unwrap()).unwrap();
        let input = walk.spue().isometry().embed(&[0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
        let probs = phase_distribution(walk.matrix(), &input, 2).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-10);
        let circuit = phase_distribution_circuit(&walk.block().unwrap(), &input, 2).unwrap();
        assert!(probs.iter().zip(&circuit).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn state_prep_lcu() {
        let walk = walk_operator(&lcu_encoding(0.25).unwrap()).unwrap();
        let (state, p) = prepare_stationary(&walk, &StateVector::zero(2).unwrap(), 3).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let h = 0.5f64.sqrt();
        assert!((state.amplitude(0).norm() - h).abs() < 1e-12 && (state.amplitude(1).norm() - h).abs() < 1e-12);
        let eigen = walk.spue().isometry().embed(&[h, h]).unwrap();
        let (_, p1) = prepare_stationary(&walk, &eigen, 3).unwrap();
        assert!((p1 - 1.0).abs() < 1e-12);

        let c = state_prep_circuit(&walk, 3, None).unwrap();
        let s = c.final_state().unwrap();
        let (sel, p2) = s.post_select(0, 0).unwrap();
        assert!((p2 - 0.5).abs() < 1e-12);
        let amps = sel.drop_qubits(&[0]).unwrap();
        assert!((crate::statevector::overlap(&amps, &state).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qae_examples() {
        let pi = uniform_pi();
        let r = qae_mean(&pi, &FunctionOracle::indicator(2, 1).unwrap(), 2, 1000, 3).unwrap();
        assert_eq!(r.estimates, BTreeMap::from([("0.5".to_string(), 1000)]));
        let r = qae_mean(&pi, &FunctionOracle::constant(2, 1.0).unwrap(), 2, 1000, 3).unwrap();
        assert_eq!(r.estimates, BTreeMap::from([("1".to_string(), 1000)]));
        let r = qae_mean(&pi, &FunctionOracle::constant(2, 0.5).unwrap(), 2, 1000, 3).unwrap();
        assert_eq!(r.estimates, BTreeMap::from([("0.5".to_string(), 1000)]));
        assert!(r.phase.histogram.keys().all(|k| *k == 1 || *k == 3));
        assert!(qae_mean(&pi, &FunctionOracle::constant(2, 0.5).unwrap(), 0, 10, 3).is_err());
    }

    #[test]
    fn gate_level_reflection_walk_matches_dense() {
        let pi = uniform_pi();
        let oracle = FunctionOracle::new(vec![0.3, 0.8]).unwrap();
        let pi_f = pi_f_state(&pi, &oracle).unwrap();
        // prep = H on x, then O_f on (x, f).
        let prep = Block::Seq(vec![
            Block::ops(vec![Gate::new(GateKind::H, vec![0], vec![])]),
            oracle.block(&[0], 1),
        ]);
        let w = reflection_walk_block(&prep, &[0, 1], 1).unwrap().unitary(2).unwrap();
        assert!(max_abs_diff(&w, &reflection_walk_matrix(&pi_f)) < 1e-12);
    }

    #[test]
    fn estimate_is_even_in_k() {
        for t in 1..6 {
            for k in 1..(1 << t) {
                assert_eq!(
                    estimate_label(mean_estimate(k, t)),
                    estimate_label(mean_estimate((1 << t) - k, t))
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reflection_spectrum(weights in proptest::collection::vec(0.05f64..1.0, 2..=8), f in proptest::collection::vec(0.0f64..=1.0, 8)) {
            let total: f64 = weights.iter().sum();
            let n = weights.len();
            let dim = n.next_power_of_two();
            let mut amps = vec![c64(0.0, 0.0); dim];
            for (i, w) in weights.iter().enumerate() {
                amps[i] = c64((w / total).sqrt(), 0.0);
            }
            let pi = StateVector::from_amplitudes(amps).unwrap();
            let mut values = f[..n].to_vec();
            values.resize(dim, 0.0);
            let oracle = FunctionOracle::new(values.clone()).unwrap();
            let pi_f = pi_f_state(&pi, &oracle).unwrap();
            let a = reflection_encoded_operator(&pi_f);
            let (vals, _) = hermitian_eigen(&a);
            let mean: f64 = weights.iter().zip(&values).map(|(w, v)| w / total * v).sum();
            let top = vals[vals.len() - 1];
            prop_assert!((top - (2.0 * mean - 1.0)).abs() < 1e-9 || (mean.abs() < 1e-12 && (top + 1.0).abs() < 1e-9));
            for v in &vals[..vals.len() - 1] {
                prop_assert!((v + 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn qpe_exact_on_eigenstates(t in 1usize..5, k_frac in 0usize..16) {
            let k = k_frac % (1 << t);
            let phase = 2.0 * PI * k as f64 / (1 << t) as f64;
            let u = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), num_complex::Complex64::from_polar(1.0, phase)]));
            let probs = phase_distribution(&u, &StateVector::basis(1, 1).unwrap(), t).unwrap();
            prop_assert!((probs[k] - 1.0).abs() < 1e-10);
            let mut c = Circuit::new(&["u"]).unwrap();
            c.push(GateKind::Phase(phase), &[0], &[]).unwrap();
            let via_circuit = phase_distribution_circuit(&c.to_block(), &StateVector::basis(1, 1).unwrap(), t).unwrap();
            prop_assert!((via_circuit[k] - 1.0).abs() < 1e-10);
        }
    }
}
