//! Python bindings: `import qgps_py`.
//!
//! Structured results (runs, reports, ledgers) come back as plain dicts and
//! lists with the same field names as the JSONL traces.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use qgps::amplification::{self, QSearchParams};
use qgps::fixedpoint::{self, BitString};
use qgps::objectives::{objective_by_name, objective_names, Objective};
use qgps::pattern::{self, Backend, PatternBasis};
use qgps::runner;
use qgps::search_step;

fn err(e: qgps::Error) -> PyErr {
    match e {
        qgps::Error::UnknownObjective { .. } => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (_, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let items = items.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Two's-complement fixed-point format with `total_bits` bits, `frac_bits`
/// of them fractional. Bit strings are `'0'`/`'1'` text, MSB first.
#[pyclass(name = "FixedPointFormat", frozen)]
struct PyFixedPointFormat {
    inner: fixedpoint::FixedPointFormat,
}

#[pymethods]
impl PyFixedPointFormat {
    #[new]
    fn new(total_bits: u32, frac_bits: u32) -> PyResult<Self> {
        Ok(Self {
            inner: fixedpoint::FixedPointFormat::new(total_bits, frac_bits).map_err(err)?,
        })
    }

    #[getter]
    fn total_bits(&self) -> u32 {
        self.inner.total_bits()
    }

    #[getter]
    fn frac_bits(&self) -> u32 {
        self.inner.frac_bits()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.inner.step()
    }

    #[getter]
    fn min_value(&self) -> f64 {
        self.inner.min_value()
    }

    #[getter]
    fn max_value(&self) -> f64 {
        self.inner.max_value()
    }

    /// Rounds to the nearest grid value; raises on overflow.
    fn encode(&self, value: f64) -> PyResult<String> {
        Ok(fixedpoint::encode_scalar(value, &self.inner).map_err(err)?.to_string())
    }

    /// Returns `(bits, saturated)`.
    fn encode_saturating(&self, value: f64) -> PyResult<(String, bool)> {
        let e = fixedpoint::encode_scalar_saturating(value, &self.inner).map_err(err)?;
        Ok((e.bits.to_string(), e.saturated))
    }

    fn decode(&self, bits: &str) -> PyResult<f64> {
        let b: BitString = bits.parse().map_err(err)?;
        fixedpoint::decode_scalar(&b, &self.inner).map_err(err)
    }

    fn encode_point(&self, point: Vec<f64>) -> PyResult<String> {
        Ok(fixedpoint::encode_point(&point, &self.inner).map_err(err)?.to_string())
    }

    fn decode_point(&self, bits: &str) -> PyResult<Vec<f64>> {
        let b: BitString = bits.parse().map_err(err)?;
        fixedpoint::decode_point(&b, &self.inner).map_err(err)
    }

    fn is_representable(&self, value: f64) -> bool {
        self.inner.is_representable(value)
    }

    fn __repr__(&self) -> String {
        format!(
            "FixedPointFormat({}, {})",
            self.inner.total_bits(),
            self.inner.frac_bits()
        )
    }
}

/// Two's-complement negation of a bit string, modulo `2^width`.
#[pyfunction]
fn negate_bits(bits: &str) -> PyResult<String> {
    let b: BitString = bits.parse().map_err(err)?;
    Ok(fixedpoint::negate_bits(&b).to_string())
}

#[pyfunction]
fn analytic_success_probability(n: u64, t: u64, j: u64) -> PyResult<f64> {
    amplification::analytic_success_probability(n, t, j).map_err(err)
}

#[pyfunction]
fn modified_round_bound(n: usize, c: f64, tau: f64) -> u64 {
    amplification::modified_round_bound(n, c, tau)
}

#[pyfunction]
fn objectives() -> Vec<&'static str> {
    objective_names()
}

/// Modified QSearch on `n` points with `t` planted improving points.
#[pyfunction]
#[pyo3(signature = (n, t, seed=0, plant_seed=0, c=1.5, tau=0.01))]
fn planted_qsearch<'py>(
    py: Python<'py>,
    n: usize,
    t: usize,
    seed: u64,
    plant_seed: u64,
    c: f64,
    tau: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let problem = search_step::planted_problem(n, t, plant_seed).map_err(err)?;
    let params = QSearchParams {
        c,
        tau,
        rng_seed: seed,
        ..QSearchParams::default()
    };
    let out = py
        .detach(|| amplification::modified_qsearch(&problem, &params))
        .map_err(err)?;
    let found = out.result.found().map(|b| {
        let (point, _, _) = problem.layout().split(b);
        point.bits() as u64
    });
    let d = PyDict::new(py);
    d.set_item("found", found.is_some())?;
    d.set_item("point", found)?;
    d.set_item("rounds", out.rounds_executed)?;
    d.set_item("u", out.u_rounds)?;
    d.set_item("q_applications", out.q_applications)?;
    d.set_item("ledger", serialize(py, &out.ledger_delta)?)?;
    Ok(d.into_any())
}

/// Rows of `(j, analytic, simulated, empirical, abs_error, sigma)` as dicts.
#[pyfunction]
#[pyo3(signature = (n, t, j_max=10, trials=100_000, seed=0))]
fn demo_amplify<'py>(
    py: Python<'py>,
    n: u64,
    t: u64,
    j_max: u64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rows = py
        .detach(|| runner::demo_amplify(n, t, j_max, trials, seed))
        .map_err(err)?;
    serialize(py, &rows)
}

/// Objective backed by a Python callable taking a list of floats.
struct PyObjective {
    func: Py<PyAny>,
}

impl Objective for PyObjective {
    fn name(&self) -> &str {
        "python"
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        // errors surface as NaN, which the runner rejects as non-finite
        Python::attach(|py| {
            self.func
                .call1(py, (x.to_vec(),))
                .and_then(|v| v.extract::<f64>(py))
                .unwrap_or(f64::NAN)
        })
    }
}

fn gps_config(
    seed: u64,
    max_iterations: u64,
    tolerance: f64,
    search_points: usize,
    format: Option<&PyFixedPointFormat>,
    oracle_budget: Option<u64>,
) -> pattern::GpsConfig {
    let mut config = pattern::GpsConfig {
        rng_seed: seed,
        max_iterations,
        mesh_size_tolerance: tolerance,
        search_points_count: search_points,
        oracle_budget,
        ..pattern::GpsConfig::default()
    };
    if let Some(f) = format {
        config.fixed_point_format = f.inner;
    }
    config
}

fn backend(name: &str, seed: u64, c: f64, tau: f64) -> PyResult<Backend> {
    match name {
        "classical" => Ok(Backend::Classical),
        "quantum" => Ok(Backend::Quantum(QSearchParams {
            c,
            tau,
            rng_seed: seed,
            ..QSearchParams::default()
        })),
        other => Err(PyValueError::new_err(format!(
            "backend must be 'classical' or 'quantum', got '{other}'"
        ))),
    }
}

/// Runs GPS from `initial_point`. `objective` is a registry name or a
/// callable `f(list[float]) -> float`.
#[pyfunction]
#[pyo3(signature = (
    objective, initial_point, backend="quantum", seed=0, max_iterations=200,
    tolerance=1.0/64.0, search_points=16, format=None, oracle_budget=None, c=1.5, tau=0.01,
))]
#[allow(clippy::too_many_arguments)]
fn gps_run<'py>(
    py: Python<'py>,
    objective: &Bound<'py, PyAny>,
    initial_point: Vec<f64>,
    backend: &str,
    seed: u64,
    max_iterations: u64,
    tolerance: f64,
    search_points: usize,
    format: Option<PyRef<'py, PyFixedPointFormat>>,
    oracle_budget: Option<u64>,
    c: f64,
    tau: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let objective: Box<dyn Objective> = match objective.extract::<String>() {
        Ok(name) => objective_by_name(&name, initial_point.len()).map_err(err)?,
        Err(_) if objective.is_callable() => Box::new(PyObjective {
            func: objective.clone().unbind(),
        }),
        Err(_) => return Err(PyValueError::new_err("objective must be a name or a callable")),
    };
    let basis = PatternBasis::standard(initial_point.len()).map_err(err)?;
    let config = gps_config(
        seed,
        max_iterations,
        tolerance,
        search_points,
        format.as_deref(),
        oracle_budget,
    );
    let backend = self::backend(backend, seed, c, tau)?;
    let run = pattern::gps_run(objective.as_ref(), &basis, &config, &backend, &initial_point).map_err(err)?;
    serialize(py, &run)
}

/// Classical vs quantum search on `n` planted points, one row per seed
/// in `seed..seed + trials`.
#[pyfunction]
#[pyo3(signature = (n, t, trials=100, seed=0, c=1.5, tau=0.01))]
fn compare_planted<'py>(
    py: Python<'py>,
    n: usize,
    t: usize,
    trials: u64,
    seed: u64,
    c: f64,
    tau: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let params = QSearchParams {
        c,
        tau,
        ..QSearchParams::default()
    };
    let seeds: Vec<u64> = (seed..seed + trials).collect();
    let report = py
        .detach(|| search_step::planted_comparison(n, t, &params, &seeds))
        .map_err(err)?;
    serialize(py, &report)
}

#[pyfunction]
fn positive_spanning(directions: Vec<Vec<f64>>) -> PyResult<bool> {
    let rows = directions.len();
    let cols = directions.first().map_or(0, Vec::len);
    if directions.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged direction matrix"));
    }
    let m = nalgebra::DMatrix::from_fn(rows, cols, |i, j| directions[i][j]);
    pattern::positive_spanning_check(&m).map_err(err)
}

#[pymodule]
fn qgps_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFixedPointFormat>()?;
    m.add_function(wrap_pyfunction!(negate_bits, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(modified_round_bound, m)?)?;
    m.add_function(wrap_pyfunction!(objectives, m)?)?;
    m.add_function(wrap_pyfunction!(planted_qsearch, m)?)?;
    m.add_function(wrap_pyfunction!(demo_amplify, m)?)?;
    m.add_function(wrap_pyfunction!(gps_run, m)?)?;
    m.add_function(wrap_pyfunction!(compare_planted, m)?)?;
    m.add_function(wrap_pyfunction!(positive_spanning, m)?)?;
    Ok(())
}
