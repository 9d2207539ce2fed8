//! Python bindings for the `qmcmc` crate.
//!
//! Reports cross the boundary as plain dicts (via their JSON form).

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use qmcmc::circuit::transpile_native;
use qmcmc::experiments::{self, Encoding, ExperimentName, ExperimentSpec};
use qmcmc::markov;
use qmcmc::noise;
use qmcmc::statevector;

fn err(e: qmcmc::Error) -> PyErr {
    match e {
        qmcmc::Error::Validation(_) | qmcmc::Error::Schema(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "MarkovKernel", module = "qmcmc_py")]
#[derive(Clone)]
struct PyKernel(markov::MarkovKernel);

#[pymethods]
impl PyKernel {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        markov::MarkovKernel::from_rows(&rows).map(Self).map_err(err)
    }

    /// Two-state chain that moves with probability `delta`.
    #[staticmethod]
    fn two_state(delta: f64) -> PyResult<Self> {
        markov::two_state_kernel(delta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        markov::MarkovKernel::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    fn stationary(&self) -> PyResult<Vec<f64>> {
        Ok(markov::stationary(&self.0).map_err(err)?.weights().to_vec())
    }

    fn is_reversible(&self) -> PyResult<bool> {
        let pi = markov::stationary(&self.0).map_err(err)?;
        Ok(markov::is_reversible(&self.0, &pi))
    }

    fn discriminant(&self) -> PyResult<Vec<Vec<f64>>> {
        let pi = markov::stationary(&self.0).map_err(err)?;
        let d = markov::discriminant(&self.0, &pi).map_err(err)?;
        Ok((0..d.nrows()).map(|i| d.row(i).iter().copied().collect()).collect())
    }

    fn spectral_gap(&self) -> PyResult<f64> {
        markov::spectral_gap(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("MarkovKernel({:?})", self.0.rows())
    }
}

#[pyclass(name = "StateVector", module = "qmcmc_py")]
#[derive(Clone)]
struct PyState(statevector::StateVector);

#[pymethods]
impl PyState {
    #[staticmethod]
    fn zero(num_qubits: usize) -> PyResult<Self> {
        statevector::StateVector::zero(num_qubits).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_amplitudes(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        statevector::StateVector::from_amplitudes(amplitudes)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.0.probabilities()
    }

    fn marginal_probabilities(&self, qubits: Vec<usize>) -> PyResult<Vec<f64>> {
        self.0.marginal_probabilities(&qubits).map_err(err)
    }

    #[pyo3(signature = (qubits, shots, seed = 1))]
    fn sample(&self, qubits: Vec<usize>, shots: u64, seed: u64) -> PyResult<BTreeMap<String, u64>> {
        self.0.sample(&qubits, shots, seed).map_err(err)
    }
}

#[pyclass(name = "Circuit", module = "qmcmc_py")]
#[derive(Clone)]
struct PyCircuit(qmcmc::circuit::Circuit);

#[pymethods]
impl PyCircuit {
    #[new]
    fn new(qubits: Vec<String>) -> PyResult<Self> {
        qmcmc::circuit::Circuit::new(&qubits).map(Self).map_err(err)
    }

    fn h(mut slf: PyRefMut<'_, Self>, q: usize) -> PyResult<PyRefMut<'_, Self>> {
        slf.0.h(q).map_err(err)?;
        Ok(slf)
    }

    fn x(mut slf: PyRefMut<'_, Self>, q: usize) -> PyResult<PyRefMut<'_, Self>> {
        slf.0.x(q).map_err(err)?;
        Ok(slf)
    }

    fn z(mut slf: PyRefMut<'_, Self>, q: usize) -> PyResult<PyRefMut<'_, Self>> {
        slf.0.z(q).map_err(err)?;
        Ok(slf)
    }

    fn cx(mut slf: PyRefMut<'_, Self>, control: usize, target: usize) -> PyResult<PyRefMut<'_, Self>> {
        slf.0.cx(control, target).map_err(err)?;
        Ok(slf)
    }

    #[getter]
    fn qubits(&self) -> Vec<String> {
        self.0.qubits().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn gate_counts(&self) -> BTreeMap<String, usize> {
        self.0.gate_counts()
    }

    fn inverse(&self) -> PyResult<Self> {
        self.0.inverse().map(Self).map_err(err)
    }

    fn final_state(&self) -> PyResult<PyState> {
        self.0.final_state().map(PyState).map_err(err)
    }

    /// Lowered onto PhasedX, Rz and ZZPhase.
    fn transpile(&self) -> PyResult<Self> {
        transpile_native(&self.0).map(Self).map_err(err)
    }
}

#[pyclass(name = "NoiseModel", module = "qmcmc_py")]
#[derive(Clone)]
struct PyNoise(noise::NoiseModel);

#[pymethods]
impl PyNoise {
    #[new]
    #[pyo3(signature = (p1 = 2e-5, p2 = 1e-3, p_meas = 1e-3, attach = "native"))]
    fn new(p1: f64, p2: f64, p_meas: f64, attach: &str) -> PyResult<Self> {
        let attach = match attach {
            "native" => noise::Attach::Native,
            "logical" => noise::Attach::Logical,
            other => return Err(PyValueError::new_err(format!("unknown attach mode `{other}`"))),
        };
        noise::NoiseModel::new(p1, p2, p_meas, attach).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        let m = &self.0;
        format!(
            "NoiseModel(p1={}, p2={}, p_meas={}, attach={:?})",
            m.p1, m.p2, m.p_meas, m.attach
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn build_spec(
    name: &str,
    shots: Option<u64>,
    seed: u64,
    delta: Option<f64>,
    angle: Option<f64>,
    t: Option<usize>,
    encoding: Option<&str>,
    noise: Option<PyNoise>,
    walk_applied: bool,
) -> PyResult<ExperimentSpec> {
    let name: ExperimentName = name.parse().map_err(err)?;
    let mut spec = ExperimentSpec::new(name).with_seed(seed).with_noise(noise.map(|n| n.0));
    if let Some(s) = shots {
        spec.shots = s;
    }
    if delta.is_some() {
        spec.delta = delta;
    }
    if angle.is_some() {
        spec.acceptance_angle = angle;
    }
    if t.is_some() {
        spec.t = t;
    }
    if let Some(e) = encoding {
        spec.encoding = Some(e.parse::<Encoding>().map_err(err)?);
    }
    spec.walk_applied = walk_applied;
    spec.validate().map_err(err)?;
    Ok(spec)
}

/// Runs an experiment and returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (name, shots = None, seed = 1, delta = None, angle = None, t = None, encoding = None, noise = None, walk_applied = false))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    name: &str,
    shots: Option<u64>,
    seed: u64,
    delta: Option<f64>,
    angle: Option<f64>,
    t: Option<usize>,
    encoding: Option<&str>,
    noise: Option<PyNoise>,
    walk_applied: bool,
) -> PyResult<PyObject> {
    let spec = build_spec(name, shots, seed, delta, angle, t, encoding, noise, walk_applied)?;
    let report = py.allow_threads(|| experiments::run(&spec)).map_err(err)?;
    to_py(py, &report)
}

/// Native gate counts and equivalence check for one experiment circuit.
#[pyfunction]
fn native_report(py: Python<'_>, name: &str) -> PyResult<PyObject> {
    let spec = build_spec(name, None, 1, None, None, None, None, None, false)?;
    let report = experiments::native_report(&spec).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    ExperimentName::ALL.iter().map(|n| n.as_str()).collect()
}

#[pymodule]
fn qmcmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyNoise>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(native_report, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
