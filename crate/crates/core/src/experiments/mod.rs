//! End-to-end experiments: circuit pipelines, reports, and comparison with
//! embedded reference data.
//!
//! Bit orders are fixed here and nowhere else. Lower layers index qubits by
//! position only.

mod output;
mod pipelines;
mod reference;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoisyExecutor};
use crate::spue::SpectralReport;
use crate::statevector::Histogram;

pub use output::{to_csv, to_table};
pub use pipelines::{build as pipeline, experiment_circuit, filter_power, native_report, NativeReport, Pipeline};
pub use reference::{compare, dataset, datasets, datasets_for, Comparison, Quantity, ReferenceDataset, OTHER};

/// Report format revision.
pub const REPORT_VERSION: &str = concat!("qmcmc-", env!("CARGO_PKG_VERSION"), "/report-1");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    LcuStatePrep,
    LcuQae,
    SzegedyStatePrep,
    CswapStatePrep,
    DualEigenstate,
    DualOverlap,
    SpectralCheck,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        Self::LcuStatePrep,
        Self::LcuQae,
        Self::SzegedyStatePrep,
        Self::CswapStatePrep,
        Self::DualEigenstate,
        Self::DualOverlap,
        Self::SpectralCheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LcuStatePrep => "lcu-state-prep",
            Self::LcuQae => "lcu-qae",
            Self::SzegedyStatePrep => "szegedy-state-prep",
            Self::CswapStatePrep => "cswap-state-prep",
            Self::DualEigenstate => "dual-eigenstate",
            Self::DualOverlap => "dual-overlap",
            Self::SpectralCheck => "spectral-check",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::LcuStatePrep => "stationary-state filter on the LCU walk of the two-state chain",
            Self::LcuQae => "amplitude estimation of E[f] for f = indicator of state 1 on the LCU-prepared state",
            Self::SzegedyStatePrep => "stationary-state filter on the Szegedy walk of the two-state chain",
            Self::CswapStatePrep => "one-bit phase estimation of the controlled-SWAP walk on its stationary state",
            Self::DualEigenstate => {
                "computational-basis statistics of the dual walk's 1-eigenstate (optionally after one walk step)"
            }
            Self::DualOverlap => "zero-outcome rate of V† W V |0⟩ for the dual walk",
            Self::SpectralCheck => "walk eigenphases against arccos of the encoded spectrum",
        }
    }

    fn default_shots(&self) -> u64 {
        match self {
            Self::LcuQae | Self::DualOverlap => 1_000,
            Self::SpectralCheck => 1,
            _ => 10_000,
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown experiment `{s}`")))
    }
}

/// Encoding selector for `spectral-check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Lcu,
    Szegedy,
    Cswap,
    Dual,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lcu" => Ok(Self::Lcu),
            "szegedy" => Ok(Self::Szegedy),
            "cswap" => Ok(Self::Cswap),
            "dual" => Ok(Self::Dual),
            _ => Err(Error::Validation(format!("unknown encoding `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// Move probability of the two-state chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `θ` of `O_A = exp(iθY)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance_angle: Option<f64>,
    pub shots: u64,
    pub seed: u64,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    /// Phase bits (lcu-qae).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<Encoding>,
    /// Measure `𝒲V|0⟩` instead of `V|0⟩` (dual-eigenstate).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub walk_applied: bool,
}

impl ExperimentSpec {
    /// Defaults: `δ = 1/4`, `θ_A = π/6` (cswap) or `π/4` (dual), `t = 2`.
    pub fn new(name: ExperimentName) -> Self {
        use std::f64::consts::PI;
        let (delta, angle, t, encoding) = match name {
            ExperimentName::LcuStatePrep | ExperimentName::SzegedyStatePrep => (Some(0.25), None, None, None),
            ExperimentName::LcuQae => (Some(0.25), None, Some(2), None),
            ExperimentName::CswapStatePrep => (None, Some(PI / 6.0), None, None),
            ExperimentName::DualEigenstate | ExperimentName::DualOverlap => (None, Some(PI / 4.0), None, None),
            ExperimentName::SpectralCheck => (Some(0.25), None, None, Some(Encoding::Szegedy)),
        };
        Self {
            name,
            delta,
            acceptance_angle: angle,
            shots: name.default_shots(),
            seed: 1,
            noise: None,
            t,
            encoding,
            walk_applied: false,
        }
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise: Option<NoiseModel>) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::Validation("shots must be at least 1".into()));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Domain(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if let Some(a) = self.acceptance_angle {
            if !(a > 0.0 && a <= std::f64::consts::FRAC_PI_2) {
                return Err(Error::Domain(format!("acceptance angle must lie in (0, π/2], got {a}")));
            }
        }
        if let Some(t) = self.t {
            if !(1..=6).contains(&t) {
                return Err(Error::Domain(format!("t must lie in 1..=6, got {t}")));
            }
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    pub(crate) fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.25)
    }

    pub(crate) fn angle(&self) -> f64 {
        self.acceptance_angle.unwrap_or(match self.name {
            ExperimentName::CswapStatePrep => std::f64::consts::PI / 6.0,
            _ => std::f64::consts::PI / 4.0,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    /// Counts over `conditional_bit_order`, restricted to successful shots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional_distribution: Option<Histogram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional_bit_order: Option<Vec<String>>,
    /// Successful shots keyed by the printed estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_estimate_histogram: Option<Histogram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_estimate: Option<f64>,
    /// Fraction of shots on outcomes the noiseless circuit can produce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_support_fraction: Option<f64>,
    /// `‖𝒲V|0⟩ − V|0⟩‖` from dense matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenstate_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub histogram: Histogram,
    pub bit_order: Vec<String>,
    pub success_count: Option<u64>,
    pub derived: Derived,
    pub comparison: Option<Comparison>,
    pub seed: u64,
    pub version: String,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn total_counts(&self) -> u64 {
        self.histogram.values().sum()
    }
}

/// Runs `spec` and compares the result with the matching `expected` dataset.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    run_inner(spec).map_err(|e| Error::Experiment {
        experiment: spec.name.to_string(),
        source: Box::new(e),
    })
}

fn run_inner(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    if spec.name == ExperimentName::SpectralCheck {
        return Ok(ExperimentReport {
            spec: spec.clone(),
            histogram: Histogram::new(),
            bit_order: vec![],
            success_count: None,
            derived: Derived {
                spectral: Some(pipelines::spectral(spec)?),
                ..Derived::default()
            },
            comparison: None,
            seed: spec.seed,
            version: REPORT_VERSION.into(),
        });
    }
    let pipeline = pipelines::build(spec)?;
    let ideal = pipeline.circuit.final_state()?;
    let histogram = match &spec.noise {
        None => ideal.sample(&pipeline.readout, spec.shots, spec.seed)?,
        Some(model) => {
            NoisyExecutor::new(&pipeline.circuit, model)?.sample(&pipeline.readout, spec.shots, spec.seed)?
        }
    };
    let ideal_probs = ideal.marginal_probabilities(&pipeline.readout)?;
    let width = pipeline.readout.len();
    let in_support: u64 = histogram
        .iter()
        .filter(|(k, _)| ideal_probs[usize::from_str_radix(k, 2).expect("bitstring")] > 1e-12)
        .map(|(_, &n)| n)
        .sum();
    debug_assert!(histogram.keys().all(|k| k.len() == width));

    let mut report = ExperimentReport {
        spec: spec.clone(),
        histogram,
        bit_order: pipeline.bit_order.clone(),
        success_count: None,
        derived: Derived {
            ideal_support_fraction: Some(in_support as f64 / spec.shots as f64),
            ..Derived::default()
        },
        comparison: None,
        seed: spec.seed,
        version: REPORT_VERSION.into(),
    };
    pipelines::derive(spec, &pipeline, &mut report)?;
    let expected = reference::datasets_for(spec.name)
        .into_iter()
        .find(|d| d.device == "expected" && d.walk_applied == spec.walk_applied);
    if let Some(d) = expected {
        report.comparison = Some(reference::compare(&report, d)?);
    }
    Ok(report)
}

/// Counts regrouped by `key`, which maps a full outcome to a sub-outcome or
/// `None` to drop it.
pub(crate) fn regroup(hist: &Histogram, key: impl Fn(&str) -> Option<String>) -> Histogram {
    let mut out = BTreeMap::new();
    for (k, &n) in hist {
        if let Some(s) = key(k) {
            *out.entry(s).or_insert(0) += n;
        }
    }
    out
}
