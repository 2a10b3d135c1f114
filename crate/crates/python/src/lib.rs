//! Python bindings: sets of `[k]^n`, line search, the three measures, the
//! extremal search, the bounds calculator, the increment driver and the
//! verification registry. Structured results come back as plain dicts.

use std::time::Duration;

use dhj_core::cube::{all_lines, count_lines_in_set, find_line_in_set, find_subspace_in_set};
use dhj_core::extremal::{max_linefree as core_max_linefree, verify_witness, ExtremalOptions};
use dhj_core::harness::{self, Suite};
use dhj_core::increment::{bounds_calculator, dhj_driver, partition_insensitive_with, DiagonalSearch, DriverConfig, PartitionLevel};
use dhj_core::measures::{
    equal_slices_measure, nondegenerate_equal_slices_measure, sample_equal_slices, sample_nondegenerate, seeded_rng,
    uniform_measure,
};
use dhj_core::rational::{fmt_ratio, parse_ratio};
use dhj_core::sperner::{is_antichain, probabilistic_sperner_density};
use dhj_core::{CubeShape, Error, Point, SearchOptions};
use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(dhj, BudgetExceeded, PyRuntimeError, "A search would exceed its work budget.");

fn err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        Error::UnknownEntry(_) => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn budget(work_budget: Option<u64>) -> SearchOptions {
    work_budget.map_or_else(SearchOptions::default, SearchOptions::with_budget)
}

/// A subset of `[k]^n`, points written as digit strings such as `"1213"`.
#[pyclass(name = "CubeSet", module = "dhj", eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyCubeSet {
    inner: dhj_core::CubeSet,
}

#[pymethods]
impl PyCubeSet {
    #[new]
    #[pyo3(signature = (k, n, points = Vec::new()))]
    fn new(k: usize, n: usize, points: Vec<String>) -> PyResult<Self> {
        let shape = CubeShape::new(k, n).map_err(err)?;
        let mut inner = dhj_core::CubeSet::empty(shape);
        for p in points {
            inner.insert(&Point::parse(shape, &p).map_err(err)?).map_err(err)?;
        }
        Ok(PyCubeSet { inner })
    }

    #[staticmethod]
    fn full(k: usize, n: usize) -> PyResult<Self> {
        Ok(PyCubeSet { inner: dhj_core::CubeSet::full(CubeShape::new(k, n).map_err(err)?) })
    }

    #[staticmethod]
    #[pyo3(signature = (k, n, p, seed = 0))]
    fn random(k: usize, n: usize, p: f64, seed: u64) -> PyResult<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PyValueError::new_err("p must lie in [0, 1]"));
        }
        let shape = CubeShape::new(k, n).map_err(err)?;
        Ok(PyCubeSet { inner: dhj_core::CubeSet::random(shape, p, &mut seeded_rng(seed)) })
    }

    /// Parses the JSON set format (`points` or `bitset_hex`).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCubeSet { inner: dhj_core::CubeSet::from_json_str(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.shape().k()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.shape().n()
    }

    fn points(&self) -> Vec<String> {
        self.inner.points().iter().map(|p| p.to_string()).collect()
    }

    fn add(&mut self, point: &str) -> PyResult<()> {
        let p = Point::parse(self.inner.shape(), point).map_err(err)?;
        self.inner.insert(&p).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len() as usize
    }

    fn __contains__(&self, point: &str) -> PyResult<bool> {
        Ok(self.inner.contains(&Point::parse(self.inner.shape(), point).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("CubeSet(k={}, n={}, len={})", self.k(), self.n(), self.inner.len())
    }

    fn complement(&self) -> Self {
        PyCubeSet { inner: self.inner.complement() }
    }

    fn union(&self, other: &PyCubeSet) -> PyResult<Self> {
        Ok(PyCubeSet { inner: self.inner.union(&other.inner).map_err(err)? })
    }

    fn intersection(&self, other: &PyCubeSet) -> PyResult<Self> {
        Ok(PyCubeSet { inner: self.inner.intersection(&other.inner).map_err(err)? })
    }

    /// Uniform density as `"p/q"`.
    fn density(&self) -> String {
        fmt_ratio(uniform_measure(&self.inner).value())
    }

    fn equal_slices_measure(&self) -> String {
        fmt_ratio(equal_slices_measure(&self.inner).value())
    }

    /// The equal-slices measure conditioned on every value appearing;
    /// needs `n >= k`.
    fn nondegenerate_measure(&self) -> PyResult<String> {
        Ok(fmt_ratio(nondegenerate_equal_slices_measure(&self.inner).map_err(err)?.value()))
    }

    /// A combinatorial line inside the set as a pattern like `"1*2*"`, or None.
    #[pyo3(signature = (work_budget = None))]
    fn find_line(&self, work_budget: Option<u64>) -> PyResult<Option<String>> {
        Ok(find_line_in_set(&self.inner, &budget(work_budget)).map_err(err)?.map(|l| l.to_string()))
    }

    fn is_line_free(&self) -> PyResult<bool> {
        Ok(self.find_line(None)?.is_none())
    }

    fn count_lines(&self) -> u64 {
        count_lines_in_set(&self.inner)
    }

    #[pyo3(signature = (d, work_budget = None))]
    fn find_subspace(&self, d: usize, work_budget: Option<u64>) -> PyResult<Option<String>> {
        Ok(find_subspace_in_set(&self.inner, d, &budget(work_budget)).map_err(err)?.map(|v| v.to_string()))
    }

    fn is_antichain(&self) -> PyResult<bool> {
        is_antichain(&self.inner).map_err(err)
    }

    /// Probability that a random line of the equal-slices kind lies in the
    /// set, against its lower bound.
    fn sperner_line_density<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let d = probabilistic_sperner_density(&self.inner).map_err(err)?;
        let out = to_py(py, &d)?;
        out.set_item("holds", d.holds())?;
        Ok(out)
    }

    #[pyo3(signature = (d, m = None, j = 1, eta = None, work_budget = None))]
    fn partition<'py>(
        &self,
        py: Python<'py>,
        d: usize,
        m: Option<usize>,
        j: u8,
        eta: Option<&str>,
        work_budget: Option<u64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let eta = eta.map(parse_ratio).transpose().map_err(err)?;
        let level = PartitionLevel { dim: d, m: m.unwrap_or(d) };
        let res = partition_insensitive_with(&self.inner, j, level, eta.as_ref(), budget(work_budget).work_budget)
            .map_err(err)?;
        let out = to_py(py, &res)?;
        out.set_item("valid", res.check(&self.inner, d))?;
        Ok(out)
    }

    #[pyo3(signature = (seed = 0, max_iterations = 32))]
    fn run_driver<'py>(&self, py: Python<'py>, seed: u64, max_iterations: usize) -> PyResult<Bound<'py, PyAny>> {
        let config = DriverConfig {
            seed,
            max_iterations,
            diagonal: DiagonalSearch { seed, ..Default::default() },
            ..Default::default()
        };
        let out = dhj_driver(&self.inner, &config).map_err(err)?;
        let value = to_py(py, &out)?;
        value.set_item("line_valid", out.line_is_valid(&self.inner))?;
        Ok(value)
    }
}

/// Line patterns of `[k]^n`; `*` marks the wildcard coordinates.
#[pyfunction]
#[pyo3(signature = (k, n, degenerate = false))]
fn lines(k: usize, n: usize, degenerate: bool) -> PyResult<Vec<String>> {
    let shape = CubeShape::new(k, n).map_err(err)?;
    SearchOptions::default().check(k + 1, n).map_err(err)?;
    Ok(all_lines(shape, degenerate).map_err(err)?.iter().map(|l| l.to_string()).collect())
}

/// The largest line-free subset of `[k]^n`.
#[pyfunction]
#[pyo3(signature = (k, n, time_budget = None, node_budget = None, symmetry = true, seed = 0))]
fn max_linefree<'py>(
    py: Python<'py>,
    k: usize,
    n: usize,
    time_budget: Option<f64>,
    node_budget: Option<u64>,
    symmetry: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let time_budget = match time_budget {
        Some(s) if !s.is_finite() || s < 0.0 => return Err(PyValueError::new_err("time_budget must be >= 0")),
        s => s.map(Duration::from_secs_f64),
    };
    let shape = CubeShape::new(k, n).map_err(err)?;
    let options = ExtremalOptions { time_budget, node_budget, symmetry, seed, ..Default::default() };
    // the search holds no Python objects, so other threads may run meanwhile
    let result = py.detach(|| core_max_linefree(shape, &options)).map_err(err)?;
    let out = to_py(py, &result)?;
    out.set_item("witness_valid", verify_witness(&result.witness, result.best_size))?;
    Ok(out)
}

/// Points sampled from the equal-slices law or its non-degenerate version.
#[pyfunction]
#[pyo3(signature = (k, n, count, law = "equal-slices", seed = 0))]
fn sample(k: usize, n: usize, count: usize, law: &str, seed: u64) -> PyResult<Vec<String>> {
    let shape = CubeShape::new(k, n).map_err(err)?;
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| match law {
            "equal-slices" => Ok(sample_equal_slices(shape, &mut rng).to_string()),
            "nondegenerate" => Ok(sample_nondegenerate(shape, &mut rng).map_err(err)?.to_string()),
            other => Err(PyValueError::new_err(format!("unknown law `{other}`"))),
        })
        .collect()
}

/// Constants of the density-increment argument for density `delta` (`"p/q"`).
#[pyfunction]
fn bounds<'py>(py: Python<'py>, k: usize, delta: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds_calculator(k, &parse_ratio(delta).map_err(err)?).map_err(err)?)
}

/// `(id, summary)` for every registered check.
#[pyfunction]
fn registry() -> Vec<(String, String)> {
    harness::registry().iter().map(|e| (e.id.to_string(), e.summary.to_string())).collect()
}

#[pyfunction]
#[pyo3(signature = (id, params = None, seed = 0))]
fn verify<'py>(py: Python<'py>, id: &str, params: Option<&str>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let params = match params {
        Some(p) => serde_json::from_str(p).map_err(|e| PyValueError::new_err(format!("params: {e}")))?,
        None => serde_json::Value::Null,
    };
    to_py(py, &harness::verify(id, &params, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (suite = "fast", seed = 0, workers = 1))]
fn verify_all<'py>(py: Python<'py>, suite: &str, seed: u64, workers: usize) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let reports = py.detach(|| harness::verify_all_with_workers(suite, seed, workers));
    to_py(py, &reports)
}

#[pymodule]
fn dhj(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCubeSet>()?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_function(wrap_pyfunction!(lines, m)?)?;
    m.add_function(wrap_pyfunction!(max_linefree, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(registry, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    Ok(())
}
