use crate::circuit::{Block, Gate, GateKind};
use crate::error::{Error, Result};
use crate::markov::{discriminant, stationary, MarkovKernel};
use crate::numerics::{c64, householder_from_e0, CMat, CVec, ONE};

use super::{IsometryCircuit, PartialIsometry, Spue};

fn g(kind: GateKind, targets: &[usize], controls: &[usize]) -> Gate {
    Gate::new(kind, targets.to_vec(), controls.to_vec())
}

/// Amplitude angle `θ = arccos √(1−δ)`.
///
/// Gates take the rotation angle of `R_Y(φ) = exp(−iφY/2)`, so the ancilla
/// rotation is `R_Y(2θ)` with `⟨0|R_Y(2θ)|0⟩ = cos θ = √(1−δ)`.
pub fn lcu_theta(delta: f64) -> f64 {
    (1.0 - delta).sqrt().acos()
}

/// `U = R_Y(−2θ)_a · CNOT(a→x) · R_Y(2θ)_a` over `[a, x]` with `□ = |0⟩_a`.
pub fn lcu_encoding(delta: f64) -> Result<Spue> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let theta = lcu_theta(delta);
    let unitary = Block::conjugate(
        Block::ops(vec![g(GateKind::Ry(2.0 * theta), &[0], &[])]),
        Block::ops(vec![g(GateKind::CNOT, &[0, 1], &[])]),
    );
    let iso = PartialIsometry::from_circuit(
        2,
        IsometryCircuit {
            prep: Block::empty(),
            inputs: vec![0, 1],
            ancillas: vec![0],
        },
    )?;
    Spue::from_block("lcu", &["a", "x"], unitary, iso)
}

fn register(prefix: &str, m: usize) -> Vec<String> {
    if m == 1 {
        vec![prefix.to_string()]
    } else {
        (0..m).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn qubits_for(m: usize) -> usize {
    m.max(1)
}

fn width(n: usize) -> usize {
    qubits_for(n.next_power_of_two().trailing_zeros() as usize)
}

/// Row preparation `O|x,0⟩ = |x⟩ Σ_y √P(x,y)|y⟩`.
fn row_preparation(kernel: &MarkovKernel, xs: &[usize], ys: &[usize]) -> Block {
    let n = kernel.n();
    if n == 2 {
        // R_Y(−φ) = S†·R_X(φ)·S and R_X = H·R_Z·H, so conjugating a
        // controlled R_Z by (S, H) loads √P(x,0)|0⟩ + √P(x,1)|1⟩ on y.
        let (x, y) = (xs[0], ys[0]);
        let angle = |row: usize| -2.0 * kernel.get(row, 0).sqrt().clamp(0.0, 1.0).acos();
        let frame = Block::ops(vec![g(GateKind::S, &[y], &[]), g(GateKind::H, &[y], &[])]);
        let inner = Block::ops(vec![
            g(GateKind::X, &[x], &[]),
            g(GateKind::Rz(angle(0)), &[y], &[x]),
            g(GateKind::X, &[x], &[]),
            g(GateKind::Rz(angle(1)), &[y], &[x]),
        ]);
        return Block::conjugate(frame, inner);
    }
    let dim = 1 << ys.len();
    let mut parts = Vec::new();
    for x in 0..n {
        let mut amps = CVec::zeros(dim);
        for y in 0..n {
            amps[y] = c64(kernel.get(x, y).sqrt(), 0.0);
        }
        let u = householder_from_e0(&amps);
        parts.push(Block::on_value(xs, x, GateKind::Unitary(u), ys));
    }
    Block::Seq(parts)
}

/// Szegedy step operator `□ = Σ_x |x⟩|P(x,·)⟩⟨x|` with `U = SWAP`; encodes
/// the discriminant matrix. Register order `[x…, y…]`.
pub fn szegedy_encoding(kernel: &MarkovKernel) -> Result<Spue> {
    let pi = stationary(kernel)?;
    discriminant(kernel, &pi)?;
    let n = kernel.n();
    let m = width(n);
    if 2 * m > crate::statevector::MAX_QUBITS || m > 3 {
        return Err(Error::Unsupported(format!(
            "Szegedy circuits support at most 8 states, got {n}"
        )));
    }
    let xs: Vec<usize> = (0..m).collect();
    let ys: Vec<usize> = (m..2 * m).collect();
    let mut names = register("x", m);
    names.extend(register("y", m));
    let prep = row_preparation(kernel, &xs, &ys);
    let iso = PartialIsometry::from_circuit(
        2 * m,
        IsometryCircuit {
            prep,
            inputs: (0..n).map(|x| x << m).collect(),
            ancillas: ys.clone(),
        },
    )?;
    let swaps = xs
        .iter()
        .zip(&ys)
        .map(|(&a, &b)| g(GateKind::Swap, &[a, b], &[]))
        .collect();
    Spue::from_block("szegedy", &names, Block::ops(swaps), iso)
}

/// Deterministic involutive proposal as a permutation, or `Unsupported`.
fn proposal_permutation(proposal: &MarkovKernel) -> Result<Vec<usize>> {
    let n = proposal.n();
    let mut perm = vec![0; n];
    for (x, slot) in perm.iter_mut().enumerate() {
        let row = proposal.row(x);
        let targets: Vec<usize> = (0..n).filter(|&y| row[y] > 1e-12).collect();
        if targets.len() != 1 || (row[targets[0]] - 1.0).abs() > 1e-12 {
            return Err(Error::Unsupported("proposal is not a deterministic permutation".into()));
        }
        *slot = targets[0];
    }
    if (0..n).any(|x| perm[perm[x]] != x) {
        return Err(Error::Unsupported("proposal permutation is not symmetric".into()));
    }
    if !n.is_power_of_two() || n > 8 {
        return Err(Error::Unsupported(format!(
            "proposal on {n} states needs a power-of-two size up to 8"
        )));
    }
    Ok(perm)
}

/// `O_T|x,0⟩ = |x, T(x)⟩`: copy then permute the out register.
pub(crate) fn proposal_oracle(perm: &[usize], xs: &[usize], ys: &[usize]) -> Vec<Gate> {
    let mut gates: Vec<Gate> = xs
        .iter()
        .zip(ys)
        .map(|(&a, &b)| g(GateKind::CNOT, &[a, b], &[]))
        .collect();
    let m = ys.len();
    if (0..perm.len()).all(|x| perm[x] == x) {
        return gates;
    }
    if m == 1 {
        gates.push(g(GateKind::X, &[ys[0]], &[]));
    } else {
        let dim = 1 << m;
        let mut p = CMat::zeros(dim, dim);
        for (x, &y) in perm.iter().enumerate() {
            p[(y, x)] = ONE;
        }
        gates.push(Gate::new(GateKind::Unitary(p), ys.to_vec(), vec![]));
    }
    gates
}

/// Metropolis encoding with a coin: `□|x⟩ = O_A O_T|x,0,0⟩`, `O_A = exp(iθY)`
/// on the coin, and `U` swaps the two registers when the coin is set.
/// Register order `[x…, y…, coin]`; the encoded operator is
/// `(1 − sin²θ)·I + sin²θ·T`.
pub fn cswap_encoding(proposal: &MarkovKernel, acceptance_angle: f64) -> Result<Spue> {
    if !acceptance_angle.is_finite() {
        return Err(Error::Domain("acceptance angle must be finite".into()));
    }
    let perm = proposal_permutation(proposal)?;
    let n = proposal.n();
    let m = width(n);
    let xs: Vec<usize> = (0..m).collect();
    let ys: Vec<usize> = (m..2 * m).collect();
    let coin = 2 * m;
    let mut names = register("x", m);
    names.extend(register("y", m));
    names.push("coin".into());
    let mut gates = proposal_oracle(&perm, &xs, &ys);
    // exp(iθY) = R_Y(−2θ)
    gates.push(g(GateKind::Ry(-2.0 * acceptance_angle), &[coin], &[]));
    let mut ancillas = ys.clone();
    ancillas.push(coin);
    let iso = PartialIsometry::from_circuit(
        2 * m + 1,
        IsometryCircuit {
            prep: Block::ops(gates),
            inputs: (0..n).map(|x| x << (m + 1)).collect(),
            ancillas,
        },
    )?;
    let swaps = xs
        .iter()
        .zip(&ys)
        .map(|(&a, &b)| g(GateKind::CSwap, &[coin, a, b], &[]))
        .collect();
    Spue::from_block("cswap", &names, Block::ops(swaps), iso)
}
