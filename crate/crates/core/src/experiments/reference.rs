//! Embedded reference counts and histogram comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::Histogram;

use super::{ExperimentName, ExperimentReport};

/// Bucket collecting outcomes a partial dataset does not list.
pub const OTHER: &str = "__other__";

/// Which report histogram a dataset is comparable with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Raw outcomes over the report bit order.
    Histogram,
    /// Successful shots over the conditional bit order.
    Conditional,
    /// Successful shots keyed by the printed mean estimate.
    MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDataset {
    pub id: String,
    pub experiment: ExperimentName,
    /// `expected` for ideal values, otherwise the device name.
    pub device: String,
    pub quantity: Quantity,
    pub bit_order: Vec<String>,
    pub counts: Histogram,
    /// Shots behind `counts`; exceeds their sum when the listing is partial.
    pub total: u64,
    /// Whether `counts` lists every observed outcome.
    pub complete: bool,
    #[serde(default)]
    pub walk_applied: bool,
}

#[derive(Deserialize)]
struct Bundle {
    version: u32,
    datasets: Vec<ReferenceDataset>,
}

static DATA: OnceLock<Vec<ReferenceDataset>> = OnceLock::new();

/// All embedded datasets.
pub fn datasets() -> &'static [ReferenceDataset] {
    DATA.get_or_init(|| {
        let bundle: Bundle =
            serde_json::from_str(include_str!("data/reference.json")).expect("embedded reference data parses");
        assert_eq!(bundle.version, 1);
        bundle.datasets
    })
}

pub fn datasets_for(name: ExperimentName) -> Vec<&'static ReferenceDataset> {
    datasets().iter().filter(|d| d.experiment == name).collect()
}

pub fn dataset(id: &str) -> Result<&'static ReferenceDataset> {
    datasets()
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| Error::Validation(format!("no reference dataset `{id}`")))
}

impl ReferenceDataset {
    /// A report's own histogram as a complete dataset.
    pub fn from_report(report: &ExperimentReport, quantity: Quantity) -> Result<Self> {
        let (counts, order) = observed(report, quantity)?;
        Ok(Self {
            id: format!("{}/self", report.spec.name),
            experiment: report.spec.name,
            device: "simulated".into(),
            quantity,
            bit_order: order,
            total: counts.values().sum(),
            counts,
            complete: true,
            walk_applied: report.spec.walk_applied,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: String,
    pub device: String,
    pub quantity: Quantity,
    /// Reference counts per bucket.
    pub expected: BTreeMap<String, u64>,
    /// Report counts per bucket.
    pub observed: BTreeMap<String, u64>,
    pub tvd: f64,
    /// Pooled two-proportion z statistic per bucket (0 when both sides agree
    /// with zero variance).
    pub z_scores: BTreeMap<String, f64>,
}

impl Comparison {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.values().fold(0.0, |m, z| m.max(z.abs()))
    }
}

fn observed(report: &ExperimentReport, quantity: Quantity) -> Result<(Histogram, Vec<String>)> {
    let missing = || Error::Schema(format!("report for {} has no {quantity:?} data", report.spec.name));
    Ok(match quantity {
        Quantity::Histogram => (report.histogram.clone(), report.bit_order.clone()),
        Quantity::Conditional => (
            report.derived.conditional_distribution.clone().ok_or_else(missing)?,
            report.derived.conditional_bit_order.clone().ok_or_else(missing)?,
        ),
        Quantity::MeanEstimate => (
            report.derived.mean_estimate_histogram.clone().ok_or_else(missing)?,
            vec!["estimate".into()],
        ),
    })
}

fn check_keys(hist: &Histogram, width: usize, what: &str) -> Result<()> {
    match hist
        .keys()
        .find(|k| k.len() != width || !k.bytes().all(|b| b == b'0' || b == b'1'))
    {
        Some(k) => Err(Error::Schema(format!(
            "{what} outcome `{k}` is not a {width}-bit string"
        ))),
        None => Ok(()),
    }
}

/// TVD and per-outcome z-scores of `report` against `reference`.
pub fn compare(report: &ExperimentReport, reference: &ReferenceDataset) -> Result<Comparison> {
    if reference.experiment != report.spec.name {
        return Err(Error::Schema(format!(
            "dataset {} is for {}, report is for {}",
            reference.id, reference.experiment, report.spec.name
        )));
    }
    if reference.walk_applied != report.spec.walk_applied {
        return Err(Error::Schema(format!(
            "dataset {} measures a different state",
            reference.id
        )));
    }
    let (obs, order) = observed(report, reference.quantity)?;
    if order != reference.bit_order {
        return Err(Error::Schema(format!(
            "bit order {:?} does not match dataset {} order {:?}",
            order, reference.id, reference.bit_order
        )));
    }
    if reference.quantity != Quantity::MeanEstimate {
        check_keys(&obs, order.len(), "report")?;
        check_keys(&reference.counts, order.len(), "reference")?;
    }

    let listed: u64 = reference.counts.values().sum();
    let mut expected: BTreeMap<String, u64> = reference.counts.clone();
    let mut observed_b: BTreeMap<String, u64> = BTreeMap::new();
    if reference.complete {
        for (k, &n) in &obs {
            observed_b.insert(k.clone(), n);
            expected.entry(k.clone()).or_insert(0);
        }
        for k in expected.keys() {
            observed_b.entry(k.clone()).or_insert(0);
        }
    } else {
        expected.insert(OTHER.into(), reference.total - listed);
        let keys: BTreeSet<&String> = reference.counts.keys().collect();
        for k in expected.keys() {
            observed_b.insert(k.clone(), 0);
        }
        for (k, &n) in &obs {
            let bucket = if keys.contains(k) { k.as_str() } else { OTHER };
            *observed_b.get_mut(bucket).expect("bucket") += n;
        }
    }

    let n_obs: u64 = observed_b.values().sum();
    let n_ref: u64 = expected.values().sum();
    if n_obs == 0 || n_ref == 0 {
        return Err(Error::Validation(format!(
            "empty histogram in comparison with {}",
            reference.id
        )));
    }
    let (n1, n2) = (n_obs as f64, n_ref as f64);
    let mut tvd = 0.0;
    let mut z_scores = BTreeMap::new();
    for (k, &e) in &expected {
        let o = observed_b[k];
        let (p1, p2) = (o as f64 / n1, e as f64 / n2);
        tvd += (p1 - p2).abs();
        let pooled = (o + e) as f64 / (n1 + n2);
        let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
        z_scores.insert(k.clone(), if se > 0.0 { (p1 - p2) / se } else { 0.0 });
    }
    Ok(Comparison {
        reference: reference.id.clone(),
        device: reference.device.clone(),
        quantity: reference.quantity,
        expected,
        observed: observed_b,
        tvd: (tvd / 2.0).clamp(0.0, 1.0),
        z_scores,
    })
}
