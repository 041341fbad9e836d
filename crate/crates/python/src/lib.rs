use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use copula_pooling::config::ModelSpec;
use copula_pooling::experiments::{preset, run_to_dir, PRESETS};
use copula_pooling::joint_demand::SUM_QUANTILE_TOL;
use copula_pooling::pooling::{self, CurveMethod, DEFAULT_SCAN_POINTS, DEFAULT_ZERO_TOL};
use copula_pooling::{
    calibrate_parameter, empirical_kendall_tau, Copula, CopulaFamily, Error, JointDemandModel, MarginalDistribution,
    MarginalFamily,
};

create_exception!(copool, NumericalError, PyRuntimeError, "Quadrature or root-finding failure.");

fn py_err(e: Error) -> PyErr {
    if e.is_numeric() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn marginal_family(name: &str) -> PyResult<MarginalFamily> {
    serde_json::from_value(serde_json::Value::String(name.to_ascii_lowercase()))
        .map_err(|_| PyValueError::new_err(format!("unknown marginal family '{name}'")))
}

fn copula_family(name: &str) -> PyResult<CopulaFamily> {
    name.parse().map_err(py_err)
}

/// A univariate demand distribution.
#[pyclass(name = "Marginal", module = "copool", frozen)]
struct PyMarginal {
    inner: MarginalDistribution,
}

#[pymethods]
impl PyMarginal {
    #[new]
    fn new(family: &str, params: Vec<f64>) -> PyResult<Self> {
        let inner = MarginalDistribution::from_params(marginal_family(family)?, &params).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density(x)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.inner.quantile(p).map_err(py_err)
    }

    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }

    fn mean(&self) -> Option<f64> {
        self.inner.mean()
    }

    fn __repr__(&self) -> String {
        format!("Marginal({})", self.inner)
    }
}

/// A bivariate copula.
#[pyclass(name = "Copula", module = "copool", frozen)]
struct PyCopula {
    inner: Copula,
}

#[pymethods]
impl PyCopula {
    #[new]
    #[pyo3(signature = (family, theta=None))]
    fn new(family: &str, theta: Option<f64>) -> PyResult<Self> {
        Ok(Self { inner: Copula::new(copula_family(family)?, theta).map_err(py_err)? })
    }

    /// Copula of `family` with Kendall's tau equal to `tau`.
    #[staticmethod]
    fn from_tau(family: &str, tau: f64) -> PyResult<Self> {
        Ok(Self { inner: calibrate_parameter(copula_family(family)?, tau).map_err(py_err)? })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn theta(&self) -> Option<f64> {
        self.inner.theta()
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.inner.cdf(u, v)
    }

    fn conditional_cdf(&self, v: f64, given_u: f64) -> f64 {
        self.inner.conditional_cdf(v, given_u)
    }

    fn inverse_conditional_cdf(&self, w: f64, given_u: f64) -> f64 {
        self.inner.inverse_conditional_cdf(w, given_u)
    }

    fn density(&self, u: f64, v: f64) -> Option<f64> {
        self.inner.density(u, v)
    }

    fn kendall_tau(&self) -> f64 {
        self.inner.kendall_tau()
    }

    /// `n` pairs from the copula, reproducible from `seed`.
    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let stream = copula_pooling::rng::UniformStream::new(seed);
        stream.pairs(0, n).map(|(a, b)| self.inner.sample_pair(a, b)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Copula({})", self.inner)
    }
}

/// Two marginals joined by a copula.
#[pyclass(name = "JointDemand", module = "copool", frozen)]
struct PyJointDemand {
    inner: JointDemandModel,
}

#[pymethods]
impl PyJointDemand {
    #[new]
    fn new(m1: PyRef<'_, PyMarginal>, m2: PyRef<'_, PyMarginal>, copula: PyRef<'_, PyCopula>) -> Self {
        Self { inner: JointDemandModel::new(m1.inner, m2.inner, copula.inner) }
    }

    /// Model from `{"m1": .., "m2": .., "copula": ..}` JSON.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = ModelSpec::from_json(text).and_then(|m| m.build()).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn m1(&self) -> PyMarginal {
        PyMarginal { inner: self.inner.marginal1 }
    }

    #[getter]
    fn m2(&self) -> PyMarginal {
        PyMarginal { inner: self.inner.marginal2 }
    }

    #[getter]
    fn copula(&self) -> PyCopula {
        PyCopula { inner: self.inner.copula }
    }

    fn joint_cdf(&self, x1: f64, x2: f64) -> f64 {
        self.inner.joint_cdf(x1, x2)
    }

    fn sum_cdf(&self, x: f64) -> PyResult<f64> {
        self.inner.sum_cdf(x).map_err(py_err)
    }

    fn sum_quantile(&self, t: f64) -> PyResult<f64> {
        Ok(self.inner.sum_quantile(t, SUM_QUANTILE_TOL).map_err(py_err)?.point)
    }

    /// `(point, ci_halfwidth)` of the Monte Carlo estimate.
    #[pyo3(signature = (t, n, seed=0))]
    fn sum_quantile_mc(&self, t: f64, n: usize, seed: u64) -> PyResult<(f64, f64)> {
        let e = self.inner.sum_quantile_mc(t, n, seed).map_err(py_err)?;
        Ok((e.point, e.ci_halfwidth))
    }

    fn dedicated(&self, t: f64) -> PyResult<f64> {
        pooling::dedicated_total(&self.inner, t).map_err(py_err)
    }

    fn pooling_effect(&self, t: f64) -> PyResult<f64> {
        pooling::pooling_effect(&self.inner, t).map_err(py_err)
    }

    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        self.inner.sample_demands(n, seed)
    }

    /// Column dict with keys t, dedicated, pooled, effect, effect_pct,
    /// ci_halfwidth; quadrature unless `mc` gives a sample size.
    #[pyo3(signature = (t_grid, mc=None, seed=0))]
    fn curve<'py>(&self, py: Python<'py>, t_grid: Vec<f64>, mc: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let method = match mc {
            Some(n) => CurveMethod::MonteCarlo { n_samples: n, seed },
            None => CurveMethod::Quadrature,
        };
        let c = py.detach(|| pooling::pooling_curve(&self.inner, &t_grid, method)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("t", c.t_grid)?;
        d.set_item("dedicated", c.dedicated)?;
        d.set_item("pooled", c.pooled)?;
        d.set_item("effect", c.effect)?;
        d.set_item("effect_pct", c.effect_pct)?;
        d.set_item("ci_halfwidth", c.ci_halfwidth)?;
        Ok(d)
    }

    #[pyo3(signature = (scan_points=DEFAULT_SCAN_POINTS, zero_tol=DEFAULT_ZERO_TOL))]
    fn thresholds<'py>(&self, py: Python<'py>, scan_points: usize, zero_tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| pooling::find_thresholds(&self.inner, scan_points, zero_tol)).map_err(py_err)?;
        to_py(py, &r.to_json())
    }

    fn __repr__(&self) -> String {
        format!("JointDemand({}, {}, {})", self.inner.marginal1, self.inner.marginal2, self.inner.copula)
    }
}

#[pyfunction]
fn calibrate(family: &str, tau: f64) -> PyResult<PyCopula> {
    PyCopula::from_tau(family, tau)
}

#[pyfunction(name = "empirical_kendall_tau")]
fn py_empirical_kendall_tau(pairs: Vec<(f64, f64)>) -> PyResult<f64> {
    empirical_kendall_tau(&pairs).map_err(py_err)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESETS.to_vec()
}

/// Runs a preset into `out_dir` and returns the check report.
#[pyfunction]
fn run_preset<'py>(py: Python<'py>, name: &str, out_dir: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let cfg = preset(name).map_err(py_err)?;
    let out = py.detach(|| run_to_dir(&cfg, &out_dir)).map_err(py_err)?;
    to_py(py, &serde_json::to_value(&out.checks).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

#[pymodule]
fn copool(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarginal>()?;
    m.add_class::<PyCopula>()?;
    m.add_class::<PyJointDemand>()?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(py_empirical_kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
