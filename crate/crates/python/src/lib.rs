use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qgt_core::linear_exact::exact_linear_qgt;
use qgt_core::perturbation::DEFAULT_MAX_ORDER;
use qgt_core::qgt::{self as core, CriticalCoupling, ModelKind, Parameter, ParameterSpace, QgtOptions};
use qgt_core::scalar::ScalarSeries;
use qgt_core::spectral::{numeric_qim, Estimator, NumericQgt, OracleConfig, ParameterPoint};
use qgt_core::verify::{run_suite, Suite, VerifyOptions};

create_exception!(qgt, QgtError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    QgtError::new_err(e.to_string())
}

fn parameter(name: &str) -> PyResult<Parameter> {
    name.parse().map_err(|e: String| PyValueError::new_err(e))
}

fn parse_model(name: &str) -> PyResult<ModelKind> {
    name.parse().map_err(|e: String| PyValueError::new_err(e))
}

/// Exact series in `a = α`, `l = λ` and `j = J` with rational coefficients.
#[pyclass(name = "Series", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySeries {
    inner: ScalarSeries,
}

#[pymethods]
impl PySeries {
    #[pyo3(signature = (alpha, lam = 0.0, j = 0.0))]
    fn eval(&self, alpha: f64, lam: f64, j: f64) -> PyResult<f64> {
        self.inner.eval(alpha, lam, j).map_err(err)
    }

    /// `(numerator, denominator, alpha_half_pow, lambda_pow, j_pow)` per term.
    fn terms(&self) -> Vec<(String, String, i32, u32, u32)> {
        self.inner
            .terms()
            .map(|t| (t.coeff.numer().to_string(), t.coeff.denom().to_string(), t.alpha_half_pow, t.lambda_pow, t.j_pow))
            .collect()
    }

    fn lambda_coefficient(&self, order: u32) -> PySeries {
        PySeries { inner: self.inner.lambda_coefficient(order) }
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Series({})", self.inner)
    }

    fn __eq__(&self, other: &PySeries) -> bool {
        self.inner == other.inner
    }
}

#[pyclass(name = "QgtResult", frozen)]
pub struct PyQgtResult {
    inner: core::QgtResult,
}

impl PyQgtResult {
    fn entry(m: &core::SeriesMatrix, a: &str, b: &str) -> PyResult<PySeries> {
        let (a, b) = (parameter(a)?, parameter(b)?);
        m.get(a, b)
            .map(|s| PySeries { inner: s.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("parameter pair ({a},{b}) not in this space")))
    }
}

#[pymethods]
impl PyQgtResult {
    #[getter]
    fn model(&self) -> String {
        self.inner.model.to_string()
    }

    #[getter]
    fn order(&self) -> u32 {
        self.inner.order
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.metric.labels.iter().map(|p| p.to_string()).collect()
    }

    #[getter]
    fn fidelity_convention(&self) -> &'static str {
        self.inner.fidelity_convention()
    }

    /// Unsymmetrised `G_ab`.
    fn component(&self, a: &str, b: &str) -> PyResult<PySeries> {
        Self::entry(&self.inner.components, a, b)
    }

    fn metric(&self, a: &str, b: &str) -> PyResult<PySeries> {
        Self::entry(&self.inner.metric, a, b)
    }

    fn curvature(&self, a: &str, b: &str) -> PyResult<PySeries> {
        Self::entry(&self.inner.curvature, a, b)
    }

    #[pyo3(signature = (alpha, lam = 0.0, j = 0.0))]
    fn evaluate(&self, alpha: f64, lam: f64, j: f64) -> PyResult<Vec<Vec<f64>>> {
        self.inner.metric.eval(alpha, lam, j).map_err(err)
    }

    fn determinant(&self) -> PyResult<PySeries> {
        let report = core::determinant_and_critical(&self.inner.metric, self.inner.order).map_err(err)?;
        Ok(PySeries { inner: report.determinant })
    }

    /// Smallest positive λ where the determinant vanishes, as text, or `None`.
    fn critical_coupling(&self) -> PyResult<Option<String>> {
        let report = core::determinant_and_critical(&self.inner.metric, self.inner.order).map_err(err)?;
        Ok(report.critical_coupling.map(|c| c.to_string()))
    }

    fn critical_coupling_at(&self, alpha: f64) -> PyResult<Option<f64>> {
        let report = core::determinant_and_critical(&self.inner.metric, self.inner.order).map_err(err)?;
        report.critical_coupling.as_ref().map(|c: &CriticalCoupling| c.eval(alpha)).transpose().map_err(err)
    }
}

#[pyclass(name = "NumericQgt", frozen)]
pub struct PyNumericQgt {
    inner: NumericQgt,
}

#[pymethods]
impl PyNumericQgt {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.iter().map(|p| p.to_string()).collect()
    }

    #[getter]
    fn metric(&self) -> Vec<Vec<f64>> {
        self.inner.metric.clone()
    }

    #[getter]
    fn step_error(&self) -> Vec<Vec<f64>> {
        self.inner.step_error.clone()
    }

    #[getter]
    fn basis_drift(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.basis_drift.clone()
    }

    #[getter]
    fn ground_energy(&self) -> f64 {
        self.inner.ground_energy
    }

    #[getter]
    fn tail_weight(&self) -> f64 {
        self.inner.tail_weight
    }

    fn get(&self, a: &str, b: &str) -> PyResult<Option<f64>> {
        Ok(self.inner.get(parameter(a)?, parameter(b)?))
    }
}

/// Symbolic QGT of `model` ("linear", "quartic" or "monomial:k") to order `λ^order`.
#[pyfunction]
#[pyo3(signature = (model = "quartic", order = 1, labels = None, max_order = DEFAULT_MAX_ORDER))]
fn compute(model: &str, order: u32, labels: Option<Vec<String>>, max_order: u32) -> PyResult<PyQgtResult> {
    let kind = parse_model(model)?;
    let space = match labels {
        None => ParameterSpace::default_for(kind),
        Some(ls) => {
            let ps = ls.iter().map(|l| parameter(l)).collect::<PyResult<Vec<_>>>()?;
            ParameterSpace::new(kind, ps).map_err(err)?
        }
    };
    let opts = QgtOptions { max_order, ..QgtOptions::new(order) };
    let inner = core::compute_qgt(&space, &opts).map_err(err)?;
    Ok(PyQgtResult { inner })
}

/// Metric from exact diagonalisation in a truncated oscillator basis.
#[pyfunction]
#[pyo3(signature = (alpha, lam = 0.0, j = 0.0, model = "quartic", basis_size = 128, fd_scale = 1e-4, fidelity = false, check_basis = false))]
#[allow(clippy::too_many_arguments)]
fn oracle(
    alpha: f64,
    lam: f64,
    j: f64,
    model: &str,
    basis_size: usize,
    fd_scale: f64,
    fidelity: bool,
    check_basis: bool,
) -> PyResult<PyNumericQgt> {
    let kind = parse_model(model)?;
    let config = OracleConfig {
        basis_size,
        fd_scale,
        estimator: if fidelity { Estimator::Fidelity } else { Estimator::Derivative },
        check_basis,
        ..OracleConfig::default()
    };
    let potential = kind.potential();
    let point = ParameterPoint { alpha, lambda: lam, j };
    let inner = numeric_qim(point, potential.as_ref(), &kind.default_labels(), &config).map_err(err)?;
    Ok(PyNumericQgt { inner })
}

/// Closed-form `[[g_αα, g_αJ], [g_Jα, g_JJ]]` of the source-deformed oscillator.
#[pyfunction]
fn exact_linear(alpha: f64, j: f64) -> PyResult<[[f64; 2]; 2]> {
    Ok(exact_linear_qgt(alpha, j).map_err(err)?.matrix())
}

/// Runs a verification suite and returns one dict per check.
#[pyfunction]
#[pyo3(signature = (suite = "all"))]
fn verify<'py>(py: Python<'py>, suite: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let suite: Suite = suite.parse().map_err(|e: String| PyValueError::new_err(e))?;
    run_suite(suite, &VerifyOptions::default())
        .into_iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("suite", c.suite)?;
            d.set_item("name", c.name)?;
            d.set_item("component", c.component)?;
            d.set_item("delta", c.delta)?;
            d.set_item("tolerance", c.tolerance)?;
            d.set_item("passed", c.passed)?;
            d.set_item("detail", c.detail)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn qgt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QgtError", m.py().get_type::<QgtError>())?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyQgtResult>()?;
    m.add_class::<PyNumericQgt>()?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(exact_linear, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
