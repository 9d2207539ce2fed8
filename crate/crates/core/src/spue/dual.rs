//! Walk on directed edges `(tail, head)` of the two-state Metropolis chain
//! with proposal `T = X`.
//!
//! One step from edge `(t, h)` keeps the tail (rejection, amplitude `cos θ`)
//! or moves to the head (acceptance, amplitude `sin θ`), then re-proposes.
//! The edge chain is encoded Szegedy-style with the SPUE ancilla selecting
//! between the identity and the in/out swap, giving `(I + A_edge)/2`.

use crate::circuit::{Block, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::statevector::StateVector;

use super::{walk_operator, IsometryCircuit, PartialIsometry, Spue, WalkOperator};

/// Register order, most significant first.
pub const DUAL_QUBITS: [&str; 6] = ["a", "outhead", "outtail", "intail", "inhead", "coin"];

const A: usize = 0;
const OH: usize = 1;
const OT: usize = 2;
const IT: usize = 3;
const IH: usize = 4;
const C: usize = 5;

#[derive(Debug, Clone)]
pub struct DualWalk {
    pub walk: WalkOperator,
    /// Prepares the walk's 1-eigenstate from `|0…0⟩`.
    pub eigenstate_preparer: Circuit,
}

fn g(kind: GateKind, targets: &[usize], controls: &[usize]) -> Gate {
    Gate::new(kind, targets.to_vec(), controls.to_vec())
}

fn cx(c: usize, t: usize) -> Gate {
    g(GateKind::CNOT, &[c, t], &[])
}

fn proposal(tail: usize, head: usize) -> Vec<Gate> {
    vec![cx(tail, head), g(GateKind::X, &[head], &[])]
}

/// `O_D|t,h⟩_in|0,0⟩_out|0⟩_coin = |t,h⟩ (cos θ |t, T t⟩ + sin θ |h, T h⟩)|0⟩`
/// for valid edges `h = T t`.
fn step_preparation(theta: f64) -> Vec<Gate> {
    let mut gates = vec![
        // exp(iθY), then Z to make both branch amplitudes positive.
        g(GateKind::Ry(-2.0 * theta), &[C], &[]),
        g(GateKind::Z, &[C], &[]),
        cx(IT, OT),
        cx(IH, OH),
        g(GateKind::CSwap, &[C, OT, OH], &[]),
        // Uncompute the coin: it equals outtail ⊕ intail.
        cx(OT, C),
        cx(IT, C),
        // Clear outhead, leaving the new state in outtail.
        cx(IH, OH),
        cx(OT, OH),
        cx(IT, OH),
    ];
    gates.extend(proposal(OT, OH));
    gates
}

pub fn dual_walk(acceptance_angle: f64) -> Result<DualWalk> {
    if !(acceptance_angle > 0.0 && acceptance_angle <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "acceptance angle must lie in (0, π/2], got {acceptance_angle}"
        )));
    }
    let mut prep = vec![g(GateKind::H, &[A], &[])];
    prep.extend(step_preparation(acceptance_angle));
    let prep = Block::ops(prep);
    let iso = PartialIsometry::from_circuit(
        6,
        IsometryCircuit {
            prep: prep.clone(),
            inputs: vec![0, 2, 4, 6],
            ancillas: vec![A, OH, OT, C],
        },
    )?;
    let unitary = Block::ops(vec![
        g(GateKind::CSwap, &[A, IT, OT], &[]),
        g(GateKind::CSwap, &[A, IH, OH], &[]),
    ]);
    let spue = Spue::from_block("dual", &DUAL_QUBITS, unitary, iso)?;
    let walk = walk_operator(&spue)?;

    let mut v = Circuit::new(&DUAL_QUBITS)?;
    v.push(GateKind::H, &[IT], &[])?;
    for gate in proposal(IT, IH) {
        v.push_gate(gate)?;
    }
    v.push_block(&prep)?;

    let state = v.final_state()?;
    let mut after = state.clone();
    after.apply_matrix(&(0..6).collect::<Vec<_>>(), &[], walk.matrix())?;
    let drift = distance(&state, &after);
    if drift > 1e-8 {
        return Err(Error::ConstructionInvalid(format!(
            "eigenstate moved by {drift:e} under the dual walk"
        )));
    }
    Ok(DualWalk {
        walk,
        eigenstate_preparer: v,
    })
}

fn distance(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spue::check_spectral_correspondence;

    #[test]
    fn eigenstate_is_the_eight_term_state() {
        let d = dual_walk(std::f64::consts::FRAC_PI_4).unwrap();
        let s = d.eigenstate_preparer.final_state().unwrap();
        let support = [10, 12, 18, 20, 42, 44, 50, 52];
        for (i, amp) in s.amplitudes().iter().enumerate() {
            let want = if support.contains(&i) { 8f64.sqrt().recip() } else { 0.0 };
            assert!(
                (amp.re - want).abs() < 1e-12 && amp.im.abs() < 1e-12,
                "index {i}: {amp}"
            );
        }
    }

    #[test]
    fn walk_is_consistent_for_all_angles() {
        for angle in [0.1, 0.5, std::f64::consts::FRAC_PI_4, 1.2, std::f64::consts::FRAC_PI_2] {
            let d = dual_walk(angle).unwrap();
            assert!(d.walk.verify_circuit().unwrap() < 1e-12);
            let r = check_spectral_correspondence(&d.walk);
            assert!(r.passed(), "{:?}", r.violations);
        }
        assert!(matches!(dual_walk(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tail_marginal_is_metropolis() {
        // Edge chain from (t, h): tail stays with cos²θ, moves with sin²θ.
        let theta: f64 = 0.3;
        let d = dual_walk(theta).unwrap();
        let a = d.walk.spue().encoded_operator().unwrap();
        // Inputs ordered (it, ih) = 00, 01, 10, 11; valid edges are 01 and 10.
        let stay = (1.0 + theta.cos().powi(2)) / 2.0;
        let moved = theta.sin().powi(2) / 2.0;
        assert!((a[(1, 1)].re - stay).abs() < 1e-12);
        assert!((a[(1, 2)].re - moved).abs() < 1e-12);
    }
}
