//! Python bindings for `splitlab`.
//!
//! Vectors cross the boundary as lists of floats; library errors surface as
//! `ValueError`.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use splitlab::algorithms::Relaxation;
use splitlab::harness::{self, AlgorithmId, ExperimentConfig, RunParams};
use splitlab::instances::build_instance;
use splitlab::rates::{BoundParams, BoundSpec};
use splitlab::{SplitError, Vector};

fn err(e: SplitError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_lists(vs: &[Vector]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

/// Result of one algorithm run.
#[pyclass(frozen, module = "splitlab_py")]
struct Trace {
    inner: splitlab::algorithms::Trace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn w(&self) -> Vec<Vec<f64>> {
        to_lists(&self.inner.w)
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        to_lists(&self.inner.x)
    }

    #[getter]
    fn y(&self) -> Vec<Vec<f64>> {
        to_lists(&self.inner.y)
    }

    #[getter]
    fn residual_sq(&self) -> Vec<f64> {
        self.inner.residual_sq.clone()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas.clone()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    fn __len__(&self) -> usize {
        self.inner.iterations()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(iterations={}, gamma={})",
            self.inner.iterations(),
            self.inner.gamma
        )
    }
}

/// A problem instance built from its id and string parameters.
#[pyclass(frozen, module = "splitlab_py")]
struct Instance {
    inner: splitlab::instances::Instance,
}

#[pymethods]
impl Instance {
    #[new]
    #[pyo3(signature = (id, params=None))]
    fn new(id: &str, params: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let inner = build_instance(id, &params.unwrap_or_default()).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn descriptor(&self) -> &str {
        &self.inner.descriptor
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Fixed point of the DR operator nearest to the origin, if known.
    fn fixed_point(&self, gamma: f64) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .fixed_point(gamma)
            .map_err(err)?
            .iter()
            .copied()
            .collect())
    }

    #[pyo3(signature = (gamma, iters, lam=1.0, w1=None, algorithm="drs"))]
    fn run(
        &self,
        gamma: f64,
        iters: usize,
        lam: f64,
        w1: Option<Vec<f64>>,
        algorithm: &str,
    ) -> PyResult<Trace> {
        let alg: AlgorithmId = algorithm.parse().map_err(err)?;
        let mut params = RunParams::new(gamma, lam);
        if let Some(w) = w1 {
            params = params.with_start(Vector::from_vec(w));
        }
        let inner = harness::run_splitting(&self.inner, alg, &params, iters).map_err(err)?;
        Ok(Trace { inner })
    }

    /// Runs DRS with the silver relaxation `(π_k, 1)` for `2^k` iterations.
    #[pyo3(signature = (gamma, k, w1=None))]
    fn run_silver(&self, gamma: f64, k: u32, w1: Option<Vec<f64>>) -> PyResult<Trace> {
        let relaxation = harness::silver_relaxation(k).map_err(err)?;
        let n = match &relaxation {
            Relaxation::Schedule(v) => v.len(),
            Relaxation::Constant(_) => unreachable!("silver relaxation is a schedule"),
        };
        let w1 = w1.map(Vector::from_vec).unwrap_or_else(|| {
            let mut v = Vector::zeros(self.inner.dim());
            v[0] = 1.0;
            v
        });
        let inner = self
            .inner
            .run_drs(gamma, &relaxation, &w1, n)
            .map_err(err)?;
        Ok(Trace { inner })
    }

    /// Runs the matching algorithm and compares it with bound `bound`.
    #[pyo3(signature = (bound, gamma, lam, iters, bound_params=None))]
    fn check<'py>(
        &self,
        py: Python<'py>,
        bound: &str,
        gamma: f64,
        lam: f64,
        iters: usize,
        bound_params: Option<BTreeMap<String, String>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut overrides = BoundParams::default();
        for (k, v) in bound_params.unwrap_or_default() {
            overrides.set(&k, &v).map_err(err)?;
        }
        let spec =
            harness::bound_for(bound, &self.inner, gamma, lam, iters, &overrides).map_err(err)?;
        let params = RunParams::new(gamma, lam);
        let report = harness::verify_bound(
            &self.inner,
            harness::algorithm_for(&spec),
            &spec,
            &params,
            iters,
        )
        .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("bound_id", &report.bound_id)?;
        d.set_item("instance_id", &report.instance_id)?;
        d.set_item("n", report.n)?;
        d.set_item("lhs", report.lhs)?;
        d.set_item("rhs", report.rhs)?;
        d.set_item("ratio", report.ratio)?;
        d.set_item("pass", report.pass)?;
        d.set_item("notes", &report.notes)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Instance({:?}, {:?})", self.inner.id, self.inner.descriptor)
    }
}

#[pyfunction]
fn silver_schedule(k: u32) -> PyResult<Vec<f64>> {
    Ok(splitlab::algorithms::silver_schedule(k)
        .map_err(err)?
        .values)
}

/// Evaluates a bound written as `id:key=value,...`, e.g. `linear-eb:mu=2,lambda=1`.
#[pyfunction]
#[pyo3(signature = (spec, force=false))]
fn evaluate_bound(spec: &str, force: bool) -> PyResult<f64> {
    let b: BoundSpec = spec.parse().map_err(err)?;
    b.evaluate(force).map_err(err)
}

/// Runs a JSON experiment config and returns the trace CSV.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("config: {e}")))?;
    Ok(harness::run_experiment(&cfg).map_err(err)?.csv)
}

#[pyfunction]
#[pyo3(signature = (which="all", trials=100, seed=0))]
fn certify<'py>(
    py: Python<'py>,
    which: &str,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = splitlab::cli::certificate_suite(which, trials, seed).map_err(err)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", &r.id)?;
            d.set_item("trials", r.trials)?;
            d.set_item("max_abs_residual", r.max_abs_residual)?;
            d.set_item("max_rel_residual", r.max_rel_residual)?;
            d.set_item("sign_violations", r.sign_violations.clone())?;
            d.set_item("pass", r.pass)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (target, budget=1000, seed=0, dim=5))]
fn search<'py>(
    py: Python<'py>,
    target: &str,
    budget: usize,
    seed: u64,
    dim: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let report = harness::conjecture_search(target, budget, seed, dim).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("target", &report.target)?;
    d.set_item("best_ratio", report.best_ratio)?;
    d.set_item("best", report.best.as_ref().map(|c| c.descriptor.clone()))?;
    let violations: Vec<(u64, f64, String)> = report
        .violations
        .iter()
        .map(|c| (c.cell, c.ratio, c.descriptor.clone()))
        .collect();
    d.set_item("violations", violations)?;
    Ok(d)
}

#[pymodule]
fn splitlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(silver_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add("SILVER_RATIO", splitlab::SILVER_RATIO)?;
    Ok(())
}
