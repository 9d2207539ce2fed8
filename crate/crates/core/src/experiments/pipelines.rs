//! Circuit construction and post-processing for each experiment.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    estimate_label, mean_estimate, phase_readout, reflection_walk_block, state_prep_circuit, FunctionOracle,
};
use crate::circuit::{transpile_native, Block, Circuit, Gate, GateCountReport, GateKind};
use crate::error::{Error, Result};
use crate::markov::{stationary, two_state_kernel, MarkovKernel};
use crate::numerics::max_abs_diff_up_to_phase;
use crate::spue::{
    check_spectral_correspondence, cswap_encoding, dual_walk, lcu_encoding, szegedy_encoding, walk_operator,
    SpectralReport, WalkOperator,
};

use super::{regroup, Encoding, ExperimentName, ExperimentReport, ExperimentSpec};

/// Unmeasured circuit plus the qubits read out, in report bit order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub circuit: Circuit,
    pub readout: Vec<usize>,
    pub bit_order: Vec<String>,
}

/// Walk power `k` of the eigenstate filter, chosen so that `k·arccos λ` is
/// as close to `π` as possible for the slowest non-stationary eigenvalue.
pub fn filter_power(lambda: f64) -> usize {
    let phase = lambda.clamp(-1.0, 1.0).acos();
    if phase <= 0.0 {
        return 1;
    }
    ((PI / phase).round() as usize).max(1)
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn lcu_walk(delta: f64) -> Result<WalkOperator> {
    walk_operator(&lcu_encoding(delta)?)
}

fn szegedy_walk(delta: f64) -> Result<WalkOperator> {
    walk_operator(&szegedy_encoding(&two_state_kernel(delta)?)?)
}

fn flip_proposal() -> Result<MarkovKernel> {
    MarkovKernel::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
}

/// State-prep circuit over `["c", walk…]` as a block.
fn filter_block(walk: &WalkOperator, power: usize) -> Result<Block> {
    Ok(state_prep_circuit(walk, power, None)?.to_block())
}

pub fn build(spec: &ExperimentSpec) -> Result<Pipeline> {
    match spec.name {
        ExperimentName::LcuStatePrep => {
            // Register [c, a, x]; report [x, c, a].
            let delta = spec.delta();
            let walk = lcu_walk(delta)?;
            let circuit = state_prep_circuit(&walk, filter_power(1.0 - 2.0 * delta), None)?;
            Ok(Pipeline {
                circuit,
                readout: vec![2, 0, 1],
                bit_order: labels(&["x", "c", "a"]),
            })
        }
        ExperimentName::SzegedyStatePrep => {
            // Register [c, x, y]; report [y, x, c].
            let delta = spec.delta();
            let walk = szegedy_walk(delta)?;
            // Start from □|0⟩, i.e. the step preparation on |00⟩.
            let start = walk
                .spue()
                .isometry()
                .circuit()
                .map(|c| c.prep.clone())
                .ok_or_else(|| Error::Unsupported("szegedy isometry has no circuit".into()))?;
            let circuit = state_prep_circuit(&walk, filter_power(1.0 - 2.0 * delta), Some(&start))?;
            Ok(Pipeline {
                circuit,
                readout: vec![2, 1, 0],
                bit_order: labels(&["y", "x", "c"]),
            })
        }
        ExperimentName::LcuQae => lcu_qae(spec),
        ExperimentName::CswapStatePrep => cswap(spec),
        ExperimentName::DualEigenstate | ExperimentName::DualOverlap => {
            let dual = dual_walk(spec.angle())?;
            let mut circuit = dual.eigenstate_preparer.clone();
            if spec.name == ExperimentName::DualOverlap || spec.walk_applied {
                circuit.append(&dual.walk.circuit()?)?;
            }
            if spec.name == ExperimentName::DualOverlap {
                circuit.append(&dual.eigenstate_preparer.inverse()?)?;
            }
            let bit_order = circuit.qubits().to_vec();
            Ok(Pipeline {
                circuit,
                readout: (0..6).collect(),
                bit_order,
            })
        }
        ExperimentName::SpectralCheck => Err(Error::Unsupported("spectral-check has no circuit".into())),
    }
}

/// Register `[x, c, j_{t−1} … j_0, f, a]`, already in report order.
fn lcu_qae(spec: &ExperimentSpec) -> Result<Pipeline> {
    let delta = spec.delta();
    let t = spec.t.unwrap_or(2);
    let mut names = vec!["x".to_string(), "c".to_string()];
    names.extend((0..t).rev().map(|b| format!("j{b}")));
    names.extend(["f".to_string(), "a".to_string()]);
    let mut circuit = Circuit::new(&names)?;
    let (x, c, f, a) = (0, 1, t + 2, t + 3);
    let phase: Vec<usize> = (0..t).map(|b| 1 + t - b).collect();

    let walk = lcu_walk(delta)?;
    let prep = filter_block(&walk, filter_power(1.0 - 2.0 * delta))?.remap(&[c, a, x]);
    let oracle = FunctionOracle::indicator(2, 1)?.block(&[x], f);
    let prep_f = Block::Seq(vec![prep, oracle]);
    let grover = reflection_walk_block(&prep_f, &[x, c, f, a], f)?;

    circuit.push_block(&prep_f)?;
    crate::algorithms::append_phase_estimation(&mut circuit, &grover, &phase)?;
    Ok(Pipeline {
        circuit,
        readout: (0..names.len()).collect(),
        bit_order: names,
    })
}

/// Register `[c, x, y, coin, anc]`; the controlled swap is routed through
/// `anc = c ∧ coin`.
fn cswap(spec: &ExperimentSpec) -> Result<Pipeline> {
    let proposal = flip_proposal()?;
    let spue = cswap_encoding(&proposal, spec.angle())?;
    let iso = spue
        .isometry()
        .circuit()
        .ok_or_else(|| Error::Unsupported("cswap isometry has no circuit".into()))?;
    let reflection = spue
        .isometry()
        .reflection_block()
        .ok_or_else(|| Error::Unsupported("cswap reflection has no circuit".into()))?;
    let names = ["c", "x", "y", "coin", "anc"];
    let (c, x, y, coin, anc) = (0, 1, 2, 3, 4);
    let map = [x, y, coin];

    // |π⟩ on x, for the chain that accepts a flip with probability sin²θ.
    let pi = stationary(&two_state_kernel(spec.angle().sin().powi(2))?)?;
    let amps = pi.coherent_amplitudes();
    let mut circuit = Circuit::new(&names)?;
    circuit.push(GateKind::Ry(2.0 * amps[1].atan2(amps[0])), &[x], &[])?;
    circuit.push_block(&iso.prep.remap(&map))?;
    circuit.h(c)?;
    let toffoli = Gate::new(GateKind::X, vec![anc], vec![c, coin]);
    circuit.push_gate(toffoli.clone())?;
    circuit.push(GateKind::CSwap, &[anc, x, y], &[])?;
    circuit.push_gate(toffoli)?;
    circuit.push_block(&reflection.remap(&map).controlled(c)?)?;
    circuit.h(c)?;
    Ok(Pipeline {
        circuit,
        readout: (0..5).collect(),
        bit_order: labels(&names),
    })
}

fn bit(outcome: &str, pos: usize) -> u8 {
    (outcome.as_bytes()[pos] == b'1') as u8
}

fn chars(outcome: &str, positions: &[usize]) -> String {
    positions.iter().map(|&p| outcome.as_bytes()[p] as char).collect()
}

/// Post-selection on `success_pos == 0` with the conditional register at
/// `cond`.
fn conditional(report: &mut ExperimentReport, success_pos: usize, cond: &[usize], cond_labels: &[&str]) {
    let hist = &report.histogram;
    let success: u64 = hist
        .iter()
        .filter(|(k, _)| bit(k, success_pos) == 0)
        .map(|(_, &n)| n)
        .sum();
    let dist = regroup(hist, |k| (bit(k, success_pos) == 0).then(|| chars(k, cond)));
    report.success_count = Some(success);
    report.derived.success_rate = Some(success as f64 / report.spec.shots as f64);
    report.derived.conditional_distribution = Some(dist);
    report.derived.conditional_bit_order = Some(labels(cond_labels));
}

pub(crate) fn derive(spec: &ExperimentSpec, pipeline: &Pipeline, report: &mut ExperimentReport) -> Result<()> {
    match spec.name {
        ExperimentName::LcuStatePrep => conditional(report, 1, &[0], &["x"]),
        ExperimentName::SzegedyStatePrep => conditional(report, 2, &[1, 0], &["x", "y"]),
        ExperimentName::CswapStatePrep => conditional(report, 0, &[1], &["x"]),
        ExperimentName::LcuQae => {
            conditional(report, 1, &[0], &["x"]);
            let t = spec.t.unwrap_or(2);
            let estimates = regroup(&report.histogram, |k| {
                (bit(k, 1) == 0).then(|| {
                    let bits: Vec<u8> = (0..t).map(|b| bit(k, 1 + t - b)).collect();
                    estimate_label(mean_estimate(phase_readout(&bits), t))
                })
            });
            report.derived.mean_estimate_histogram = Some(estimates);
        }
        ExperimentName::DualEigenstate => {
            let dual = dual_walk(spec.angle())?;
            let v = dual.eigenstate_preparer.final_state()?;
            let mut w = v.clone();
            w.apply_matrix(&(0..6).collect::<Vec<_>>(), &[], dual.walk.matrix())?;
            let residual = v
                .amplitudes()
                .iter()
                .zip(w.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            report.derived.eigenstate_residual = Some(residual);
        }
        ExperimentName::DualOverlap => {
            let zeros = report
                .histogram
                .get(&"0".repeat(pipeline.readout.len()))
                .copied()
                .unwrap_or(0);
            report.success_count = Some(zeros);
            report.derived.overlap_estimate = Some(zeros as f64 / spec.shots as f64);
        }
        ExperimentName::SpectralCheck => {}
    }
    Ok(())
}

pub(crate) fn spectral(spec: &ExperimentSpec) -> Result<SpectralReport> {
    let encoding = spec.encoding.unwrap_or(Encoding::Szegedy);
    let walk = match encoding {
        Encoding::Lcu => lcu_walk(spec.delta())?,
        Encoding::Szegedy => szegedy_walk(spec.delta())?,
        Encoding::Cswap => {
            let angle = spec.acceptance_angle.unwrap_or(PI / 6.0);
            walk_operator(&cswap_encoding(&flip_proposal()?, angle)?)?
        }
        Encoding::Dual => dual_walk(spec.acceptance_angle.unwrap_or(PI / 4.0))?.walk,
    };
    Ok(check_spectral_correspondence(&walk))
}

/// Experiment circuit with terminal measurements in report bit order.
pub fn experiment_circuit(spec: &ExperimentSpec) -> Result<Circuit> {
    let p = build(spec)?;
    let mut c = p.circuit;
    for q in p.readout {
        c.measure(q)?;
    }
    Ok(c)
}

/// Native-gate lowering of one experiment circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeReport {
    pub experiment: ExperimentName,
    pub qubits: usize,
    pub logical_gates: usize,
    pub native: GateCountReport,
    /// Largest entry of `|U_native − e^{iφ} U_logical|` over the unitary part.
    pub max_deviation: f64,
    pub warnings: Vec<String>,
}

fn reference_counts(name: ExperimentName) -> Option<BTreeMap<String, usize>> {
    let pairs: &[(&str, usize)] = match name {
        ExperimentName::SzegedyStatePrep => &[("PhasedX", 92), ("ZZPhase", 71), ("Measure", 3), ("total", 166)],
        ExperimentName::CswapStatePrep => &[("PhasedX", 126), ("ZZPhase", 91), ("Measure", 5), ("total", 222)],
        ExperimentName::LcuQae => &[("total", 237)],
        _ => return None,
    };
    Some(pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect())
}

/// Transpiles the experiment circuit and checks equivalence up to global phase.
pub fn native_report(spec: &ExperimentSpec) -> Result<NativeReport> {
    let logical = experiment_circuit(spec)?;
    let native = transpile_native(&logical)?;
    let max_deviation = max_abs_diff_up_to_phase(
        &native.without_measurements().unitary_of()?,
        &logical.without_measurements().unitary_of()?,
    );
    let counts = GateCountReport::new(&native, reference_counts(spec.name));
    let warnings = counts.warnings();
    for w in &warnings {
        log::warn!("{}: {w}", spec.name);
    }
    Ok(NativeReport {
        experiment: spec.name,
        qubits: logical.num_qubits(),
        logical_gates: logical.len(),
        native: counts,
        max_deviation,
        warnings,
    })
}
