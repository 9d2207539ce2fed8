//! Lowering to the trapped-ion native set {PhasedX, Rz, ZZPhase, Measure}.
//!
//! Pipeline: every gate is first expanded into single-qubit unitaries with
//! controls (generic unitaries via Givens rotations along a Gray-code order),
//! multi-controlled gates are reduced to CNOT plus single-qubit gates (Barenco
//! recursion, 6-CNOT Toffoli), CNOTs become one ZZPhase each, and finally
//! single-qubit runs are fused into at most `Rz · PhasedX`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::numerics::{identity, CMat, ONE, ZERO};

const ANGLE_EPS: f64 = 1e-12;

/// `U = e^{iδ} Rz(α) Ry(β) Rz(γ)`, returned as `(δ, α, β, γ)`.
pub fn zyz(u: &CMat) -> (f64, f64, f64, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let delta = det.arg() / 2.0;
    let v = u * Complex64::from_polar(1.0, -delta);
    let (a, b) = (v[(0, 0)], v[(1, 0)]);
    let beta = 2.0 * b.norm().atan2(a.norm());
    let (sum, diff) = if a.norm() < 1e-12 {
        (0.0, 2.0 * b.arg())
    } else if b.norm() < 1e-12 {
        (-2.0 * a.arg(), 0.0)
    } else {
        (-2.0 * a.arg(), 2.0 * b.arg())
    };
    (delta, (sum + diff) / 2.0, beta, (sum - diff) / 2.0)
}

/// Principal square root of a 2×2 unitary.
fn sqrt2(u: &CMat) -> CMat {
    let tr = u[(0, 0)] + u[(1, 1)];
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let disc = (tr * tr - det * 4.0).sqrt();
    let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    let s1 = l1.sqrt();
    let mut s2 = l2.sqrt();
    if (s1 + s2).norm() < 1e-9 {
        s2 = -s2;
    }
    let denom = s1 + s2;
    (u + identity(2) * (s1 * s2)) / denom
}

/// Single-qubit unitary with controls (all active on |1⟩).
#[derive(Debug, Clone)]
struct Cu {
    m: CMat,
    target: usize,
    controls: Vec<usize>,
}

fn x_mat() -> CMat {
    GateKind::X.matrix().expect("unitary")
}

fn cu(m: CMat, target: usize, controls: Vec<usize>) -> Cu {
    Cu { m, target, controls }
}

fn with(controls: &[usize], extra: &[usize]) -> Vec<usize> {
    controls.iter().chain(extra).copied().collect()
}

/// Stage 1: expand a gate into controlled single-qubit unitaries.
fn expand(g: &Gate, out: &mut Vec<Cu>) -> Result<()> {
    let c = &g.controls;
    let t = &g.targets;
    match &g.kind {
        GateKind::CNOT => out.push(cu(x_mat(), t[1], with(c, &[t[0]]))),
        GateKind::CZ => out.push(cu(GateKind::Z.matrix().expect("unitary"), t[1], with(c, &[t[0]]))),
        GateKind::Swap | GateKind::CSwap => {
            let (k, a, b) = if g.kind == GateKind::CSwap {
                (vec![t[0]], t[1], t[2])
            } else {
                (vec![], t[0], t[1])
            };
            out.push(cu(x_mat(), b, vec![a]));
            out.push(cu(x_mat(), a, with(&with(c, &k), &[b])));
            out.push(cu(x_mat(), b, vec![a]));
        }
        GateKind::ZZPhase(gamma) => {
            out.push(cu(x_mat(), t[1], vec![t[0]]));
            out.push(cu(GateKind::Rz(*gamma).matrix().expect("unitary"), t[1], c.clone()));
            out.push(cu(x_mat(), t[1], vec![t[0]]));
        }
        GateKind::GlobalPhase(phi) => {
            if let Some((&last, rest)) = c.split_last() {
                out.push(cu(
                    GateKind::Phase(*phi).matrix().expect("unitary"),
                    last,
                    rest.to_vec(),
                ));
            }
        }
        GateKind::Unitary(m) if m.nrows() > 2 => givens(m, t, c, out),
        kind => {
            let m = kind
                .matrix()
                .ok_or_else(|| Error::Unsupported(format!("{} inside a unitary section", kind.name())))?;
            out.push(cu(m, t[0], c.clone()));
        }
    }
    Ok(())
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Two-level decomposition of a `2^k`-dimensional unitary along the Gray-code
/// order, so every rotation acts on a pair of indices differing in one bit.
fn givens(u: &CMat, targets: &[usize], controls: &[usize], out: &mut Vec<Cu>) {
    let d = u.nrows();
    let k = targets.len();
    let mut w = u.clone();
    // (bit position, fixed index with that bit clear, 2×2 block)
    let mut rotations: Vec<(usize, usize, CMat)> = Vec::new();
    for col_pos in 0..d - 1 {
        let col = gray(col_pos);
        for row_pos in (col_pos + 1..d).rev() {
            let (lo_idx, hi_idx) = (gray(row_pos - 1), gray(row_pos));
            let b = w[(hi_idx, col)];
            if b.norm() < 1e-14 {
                continue;
            }
            let a = w[(lo_idx, col)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            // G maps (a, b) to (r, 0) on rows (lo, hi).
            let g = CMat::from_row_slice(2, 2, &[a.conj() / r, b.conj() / r, -b / r, a / r]);
            let diff = lo_idx ^ hi_idx;
            let bit = k - 1 - diff.trailing_zeros() as usize;
            let (zero_idx, one_idx) = if lo_idx & diff == 0 {
                (lo_idx, hi_idx)
            } else {
                (hi_idx, lo_idx)
            };
            // Express G in the (bit=0, bit=1) basis.
            let gb = if zero_idx == lo_idx {
                g.clone()
            } else {
                let p = x_mat();
                &p * &g * &p
            };
            for c in 0..d {
                let (x0, x1) = (w[(zero_idx, c)], w[(one_idx, c)]);
                w[(zero_idx, c)] = gb[(0, 0)] * x0 + gb[(0, 1)] * x1;
                w[(one_idx, c)] = gb[(1, 0)] * x0 + gb[(1, 1)] * x1;
            }
            rotations.push((bit, zero_idx, gb));
        }
    }
    // w is now diagonal: u = G_1† ⋯ G_m† · w.
    for i in 0..d {
        let phase = w[(i, i)];
        if (phase - ONE).norm() < 1e-14 {
            continue;
        }
        let (bit, base, m) = if i == 0 {
            (k - 1, 0, CMat::from_row_slice(2, 2, &[phase, ZERO, ZERO, ONE]))
        } else {
            let bit = k - 1 - i.trailing_zeros() as usize;
            let base = i & !(1 << (k - 1 - bit));
            (bit, base, CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, phase]))
        };
        two_level(&m, bit, base, targets, controls, out);
    }
    for (bit, base, g) in rotations.iter().rev() {
        two_level(&g.adjoint(), *bit, *base, targets, controls, out);
    }
}

/// `m` on local `bit`, conditioned on the other local bits equal to `base`.
fn two_level(m: &CMat, bit: usize, base: usize, targets: &[usize], controls: &[usize], out: &mut Vec<Cu>) {
    let k = targets.len();
    let flips: Vec<usize> = (0..k)
        .filter(|&p| p != bit && (base >> (k - 1 - p)) & 1 == 0)
        .map(|p| targets[p])
        .collect();
    let mut ctl: Vec<usize> = (0..k).filter(|&p| p != bit).map(|p| targets[p]).collect();
    ctl.extend_from_slice(controls);
    for &q in &flips {
        out.push(cu(x_mat(), q, vec![]));
    }
    out.push(cu(m.clone(), targets[bit], ctl));
    for &q in &flips {
        out.push(cu(x_mat(), q, vec![]));
    }
}

/// Elementary gate after stage 2.
#[derive(Debug, Clone)]
enum Elem {
    One(CMat, usize),
    Cx(usize, usize),
}

/// Stage 2: reduce controlled single-qubit unitaries to CNOT + 1q.
fn reduce(g: &Cu, out: &mut Vec<Elem>) {
    match g.controls.len() {
        0 => out.push(Elem::One(g.m.clone(), g.target)),
        1 => {
            let c = g.controls[0];
            let t = g.target;
            if (g.m.clone() - x_mat()).norm() < 1e-14 {
                out.push(Elem::Cx(c, t));
                return;
            }
            let (delta, alpha, beta, gamma) = zyz(&g.m);
            let rz = |a: f64| GateKind::Rz(a).matrix().expect("unitary");
            let ry = |a: f64| GateKind::Ry(a).matrix().expect("unitary");
            let a = rz(alpha) * ry(beta / 2.0);
            let b = ry(-beta / 2.0) * rz(-(gamma + alpha) / 2.0);
            let cm = rz((gamma - alpha) / 2.0);
            out.push(Elem::One(cm, t));
            out.push(Elem::Cx(c, t));
            out.push(Elem::One(b, t));
            out.push(Elem::Cx(c, t));
            out.push(Elem::One(a, t));
            out.push(Elem::One(GateKind::Phase(delta).matrix().expect("unitary"), c));
        }
        2 if (g.m.clone() - x_mat()).norm() < 1e-14 => toffoli(g.controls[0], g.controls[1], g.target, out),
        n => {
            let (rest, last) = (&g.controls[..n - 1], g.controls[n - 1]);
            let v = sqrt2(&g.m);
            reduce(&cu(v.clone(), g.target, vec![last]), out);
            reduce(&cu(x_mat(), last, rest.to_vec()), out);
            reduce(&cu(v.adjoint(), g.target, vec![last]), out);
            reduce(&cu(x_mat(), last, rest.to_vec()), out);
            reduce(&cu(v, g.target, rest.to_vec()), out);
        }
    }
}

fn toffoli(a: usize, b: usize, t: usize, out: &mut Vec<Elem>) {
    let m = |k: GateKind| k.matrix().expect("unitary");
    let one = |k: GateKind, q: usize| Elem::One(m(k), q);
    out.extend([
        one(GateKind::H, t),
        Elem::Cx(b, t),
        one(GateKind::Tdg, t),
        Elem::Cx(a, t),
        one(GateKind::T, t),
        Elem::Cx(b, t),
        one(GateKind::Tdg, t),
        Elem::Cx(a, t),
        one(GateKind::T, b),
        one(GateKind::T, t),
        one(GateKind::H, t),
        Elem::Cx(a, b),
        one(GateKind::T, a),
        one(GateKind::Tdg, b),
        Elem::Cx(a, b),
    ]);
}

fn near_zero_mod(angle: f64, period: f64) -> bool {
    let r = angle.rem_euclid(period);
    r < ANGLE_EPS || period - r < ANGLE_EPS
}

/// Emits `Rz(α+γ)·PhasedX(β, π/2−γ)` for a pending single-qubit product.
fn flush(pending: &mut [Option<CMat>], q: usize, out: &mut Circuit) -> Result<()> {
    if let Some(u) = pending[q].take() {
        let (_, alpha, beta, gamma) = zyz(&u);
        if !near_zero_mod(beta, 2.0 * PI) {
            out.push(
                GateKind::PhasedX {
                    theta: beta,
                    phi: FRAC_PI_2 - gamma,
                },
                &[q],
                &[],
            )?;
            if !near_zero_mod(alpha + gamma, 2.0 * PI) {
                out.push(GateKind::Rz(alpha + gamma), &[q], &[])?;
            }
        } else {
            // Diagonal up to phase; β ≡ 0 or 2π, both give Rz(α+γ) up to sign.
            let total = alpha + gamma;
            if !near_zero_mod(total, 2.0 * PI) {
                out.push(GateKind::Rz(total), &[q], &[])?;
            }
        }
    }
    Ok(())
}

fn lift(pending: &mut [Option<CMat>], q: usize, m: CMat) {
    pending[q] = Some(match pending[q].take() {
        Some(p) => m * p,
        None => m,
    });
}

/// Rewrites `circuit` over {PhasedX, Rz, ZZPhase, Measure} (Reset passes
/// through). The result equals the input up to a global phase.
pub fn transpile_native(circuit: &Circuit) -> Result<Circuit> {
    let n = circuit.num_qubits();
    let mut out = Circuit::new(circuit.qubits())?;
    out.allow_mid_circuit_measurement = circuit.allow_mid_circuit_measurement;
    let mut pending: Vec<Option<CMat>> = vec![None; n];
    let h = GateKind::H.matrix().expect("unitary");
    let rz_half = GateKind::Rz(FRAC_PI_2).matrix().expect("unitary");
    let mut cus = Vec::new();
    let mut elems = Vec::new();
    for g in circuit.ops() {
        if matches!(g.kind, GateKind::Measure | GateKind::Reset) {
            flush(&mut pending, g.targets[0], &mut out)?;
            out.push_gate(g.clone())?;
            continue;
        }
        cus.clear();
        expand(g, &mut cus)?;
        elems.clear();
        for c in &cus {
            reduce(c, &mut elems);
        }
        for e in &elems {
            match e {
                Elem::One(m, q) => lift(&mut pending, *q, m.clone()),
                Elem::Cx(c, t) => {
                    // CX = H_t · (Rz(π/2) ⊗ Rz(π/2)) · ZZPhase(-π/2) · H_t up to phase.
                    lift(&mut pending, *t, h.clone());
                    flush(&mut pending, *c, &mut out)?;
                    flush(&mut pending, *t, &mut out)?;
                    push_zz(&mut out, *c, *t, -FRAC_PI_2)?;
                    lift(&mut pending, *c, rz_half.clone());
                    lift(&mut pending, *t, rz_half.clone());
                    lift(&mut pending, *t, h.clone());
                }
            }
        }
    }
    for q in 0..n {
        flush(&mut pending, q, &mut out)?;
    }
    Ok(out)
}

/// Appends a ZZPhase, merging with an immediately preceding one on the same pair.
fn push_zz(out: &mut Circuit, a: usize, b: usize, gamma: f64) -> Result<()> {
    let prev = out.ops.iter().rposition(|g| g.qubits().any(|q| q == a || q == b));
    if let Some(i) = prev {
        let g = &out.ops[i];
        if let GateKind::ZZPhase(old) = g.kind {
            let mut pair = g.targets.clone();
            pair.sort_unstable();
            let mut want = vec![a, b];
            want.sort_unstable();
            if pair == want {
                let merged = old + gamma;
                if near_zero_mod(merged, 2.0 * PI) {
                    out.ops.remove(i);
                } else {
                    out.ops[i].kind = GateKind::ZZPhase(merged);
                }
                return Ok(());
            }
        }
    }
    out.push(GateKind::ZZPhase(gamma), &[a, b], &[])?;
    Ok(())
}

/// Native gate counts (`total` excludes Rz) and an optional reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCountReport {
    pub counts: BTreeMap<String, usize>,
    pub reference: Option<BTreeMap<String, usize>>,
}

impl GateCountReport {
    pub fn new(circuit: &Circuit, reference: Option<BTreeMap<String, usize>>) -> Self {
        let mut counts = circuit.gate_counts();
        // Rz is a frame update on the target hardware and is not counted.
        let total = circuit
            .ops()
            .iter()
            .filter(|g| !matches!(g.kind, GateKind::Rz(_)))
            .count();
        counts.insert("total".into(), total);
        Self { counts, reference }
    }

    /// Kinds whose count exceeds twice the reference.
    pub fn warnings(&self) -> Vec<String> {
        let Some(reference) = &self.reference else {
            return vec![];
        };
        reference
            .iter()
            .filter_map(|(k, &r)| {
                let got = self.counts.get(k).copied().unwrap_or(0);
                (got > 2 * r).then(|| format!("{k}: {got} exceeds twice the reference {r}"))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, max_abs_diff_up_to_phase, unitarity_defect};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_unitary(dim: usize, seed: u64) -> CMat {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = CMat::from_fn(dim, dim, |_, _| {
            c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        m.qr().q()
    }

    fn assert_native_equivalent(c: &Circuit) {
        let t = transpile_native(c).unwrap();
        for g in t.ops() {
            assert!(
                matches!(
                    g.kind,
                    GateKind::PhasedX { .. } | GateKind::Rz(_) | GateKind::ZZPhase(_)
                ),
                "non-native {}",
                g.kind.name()
            );
            assert!(g.controls.is_empty());
        }
        let d = max_abs_diff_up_to_phase(&c.unitary_of().unwrap(), &t.unitary_of().unwrap());
        assert!(d < 1e-9, "diff {d}");
    }

    #[test]
    fn zyz_reconstructs() {
        for seed in 0..20 {
            let u = random_unitary(2, seed);
            let (d, a, b, g) = zyz(&u);
            let r = GateKind::Rz(a).matrix().unwrap()
                * GateKind::Ry(b).matrix().unwrap()
                * GateKind::Rz(g).matrix().unwrap()
                * Complex64::from_polar(1.0, d);
            assert!((r - u).norm() < 1e-12);
        }
        let (_, _, b, _) = zyz(&x_mat());
        assert!((b - PI).abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        for seed in 0..20 {
            let u = random_unitary(2, seed);
            let v = sqrt2(&u);
            assert!((&v * &v - &u).norm() < 1e-12);
            assert!(unitarity_defect(&v) < 1e-12);
        }
        for k in [GateKind::X, GateKind::Z, GateKind::Y] {
            let u = k.matrix().unwrap();
            let v = sqrt2(&u);
            assert!((&v * &v - &u).norm() < 1e-12);
        }
        let minus = -identity(2);
        assert!((sqrt2(&minus) * sqrt2(&minus) - minus).norm() < 1e-12);
    }

    #[test]
    fn cnot_is_one_zzphase() {
        let mut c = Circuit::new(&["a", "b"]).unwrap();
        c.cx(0, 1).unwrap();
        let t = transpile_native(&c).unwrap();
        assert_eq!(t.gate_counts().get("ZZPhase"), Some(&1));
        assert_native_equivalent(&c);
    }

    #[test]
    fn every_kind_lowers() {
        let mut c = Circuit::new(&["a", "b", "c", "d"]).unwrap();
        c.push(GateKind::CSwap, &[0, 1, 2], &[3]).unwrap();
        c.push(GateKind::Swap, &[3, 1], &[]).unwrap();
        c.push(GateKind::Ry(0.7), &[2], &[0, 1, 3]).unwrap();
        c.push(GateKind::X, &[0], &[1, 2]).unwrap();
        c.push(GateKind::ZZPhase(0.3), &[0, 2], &[1]).unwrap();
        c.push(GateKind::GlobalPhase(0.9), &[], &[1, 2]).unwrap();
        c.push(GateKind::CZ, &[2, 0], &[]).unwrap();
        c.push(GateKind::PhasedX { theta: 0.2, phi: 1.1 }, &[3], &[0]).unwrap();
        c.push(GateKind::Unitary(random_unitary(4, 3)), &[1, 3], &[]).unwrap();
        c.push(GateKind::Unitary(random_unitary(8, 4)), &[3, 0, 2], &[1])
            .unwrap();
        assert_native_equivalent(&c);
    }

    #[test]
    fn measurements_pass_through() {
        let mut c = Circuit::new(&["a", "b"]).unwrap();
        c.h(0).unwrap().cx(0, 1).unwrap().measure_all().unwrap();
        let t = transpile_native(&c).unwrap();
        assert_eq!(t.gate_counts().get("Measure"), Some(&2));
        let strip = |c: &Circuit| c.without_measurements().unitary_of().unwrap();
        assert!(max_abs_diff_up_to_phase(&strip(&c), &strip(&t)) < 1e-9);
    }

    #[test]
    fn report_warns_on_large_counts() {
        let mut c = Circuit::new(&["a", "b"]).unwrap();
        for _ in 0..5 {
            c.h(0).unwrap().cx(0, 1).unwrap();
        }
        let t = transpile_native(&c).unwrap();
        let reference = BTreeMap::from([("ZZPhase".to_string(), 1)]);
        let r = GateCountReport::new(&t, Some(reference));
        assert_eq!(r.warnings().len(), 1);
        assert!(GateCountReport::new(&t, None).warnings().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_generic_unitaries(seed in 0u64..1000, k in 1usize..=3, ctl in 0usize..2) {
            let mut c = Circuit::new(&["a", "b", "c", "d"]).unwrap();
            let targets: Vec<usize> = (0..k).map(|i| (i + seed as usize) % 4).collect();
            let controls: Vec<usize> = (0..4).filter(|q| !targets.contains(q)).take(ctl).collect();
            c.push(GateKind::Unitary(random_unitary(1 << k, seed)), &targets, &controls).unwrap();
            let t = transpile_native(&c).unwrap();
            let d = max_abs_diff_up_to_phase(&c.unitary_of().unwrap(), &t.unitary_of().unwrap());
            prop_assert!(d < 1e-9, "diff {}", d);
        }
    }
}
