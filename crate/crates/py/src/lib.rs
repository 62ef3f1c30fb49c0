//! Python bindings: the main group/calculus types and the scenario runners.
//!
//! Build with `cargo build -p carnot-py --release`; the resulting
//! `libcarnot_py.so` imports as `carnot_py` once renamed/copied to
//! `carnot_py.so` on the Python path (see `python/smoke_test.py`).

use carnot_core::calculus;
use carnot_core::expr;
use carnot_core::group::{CarnotGroup, Point};
use carnot_core::scenario::{
    self, run_group_check, ScenarioConfig,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A Carnot group of step <= 3 in exponential coordinates.
#[pyclass(frozen)]
struct Group {
    inner: CarnotGroup,
}

#[pymethods]
impl Group {
    /// Abelian group on R^n.
    #[staticmethod]
    fn euclidean(n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(err("dimension must be >= 1"));
        }
        Ok(Group { inner: CarnotGroup::euclidean(n) })
    }

    /// Heisenberg group H^n (layers 2n, 1).
    #[staticmethod]
    fn heisenberg(n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(err("dimension must be >= 1"));
        }
        Ok(Group { inner: CarnotGroup::heisenberg(n) })
    }

    /// Engel group (layers 2, 1, 1).
    #[staticmethod]
    fn engel() -> Self {
        Group { inner: CarnotGroup::engel() }
    }

    /// Resolve a built-in name: euclidean:n, heisenberg:n, engel.
    #[staticmethod]
    fn by_name(name: &str) -> PyResult<Self> {
        Ok(Group { inner: CarnotGroup::by_name(name).map_err(err)? })
    }

    /// Build a custom group from a JSON spec
    /// `{ "name", "layer_dims", "brackets": [{"i","j","out"}] }`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Group { inner: CarnotGroup::from_json(text).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn horizontal_dim(&self) -> usize {
        self.inner.horizontal_dim()
    }

    #[getter]
    fn step(&self) -> usize {
        self.inner.step()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Group product in exponential coordinates.
    fn multiply(&self, p: Vec<f64>, q: Vec<f64>) -> PyResult<Vec<f64>> {
        let r = self
            .inner
            .multiply(&Point::new(p), &Point::new(q))
            .map_err(err)?;
        Ok(r.coords)
    }

    fn inverse(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.inverse(&Point::new(p)).map_err(err)?.coords)
    }

    /// Non-isotropic dilation: layer i scales by lambda^i.
    fn dilate(&self, lam: f64, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.dilate(lam, &Point::new(p)).map_err(err)?.coords)
    }

    /// Homogeneous gauge pseudo-norm.
    fn gauge_norm(&self, p: Vec<f64>) -> PyResult<f64> {
        self.inner.gauge_norm(&Point::new(p)).map_err(err)
    }

    /// Gauge pseudo-distance d(p, q) = N(p^-1 . q).
    fn distance(&self, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
        self.inner.distance(&Point::new(p), &Point::new(q)).map_err(err)
    }

    /// Coefficient matrix of the horizontal frame at a point (m x n rows).
    fn coefficient_matrix(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let c = calculus::coefficient_matrix(&self.inner, &Point::new(x)).map_err(err)?;
        Ok((0..c.a.nrows())
            .map(|l| (0..c.a.ncols()).map(|k| c.a[(l, k)]).collect())
            .collect())
    }

    /// Horizontal jet of an expression at a point:
    /// (value, gradient, hessian rows).
    fn horizontal_jet(
        &self,
        expr_text: &str,
        x: Vec<f64>,
    ) -> PyResult<(f64, Vec<f64>, Vec<Vec<f64>>)> {
        let e = expr::parse(expr_text).map_err(err)?;
        let jet =
            calculus::horizontal_jet_from_expr(&self.inner, &e, &Point::new(x)).map_err(err)?;
        let m = jet.dim();
        Ok((
            jet.value,
            jet.gradient.iter().cloned().collect(),
            (0..m).map(|i| (0..m).map(|j| jet.hessian[(i, j)]).collect()).collect(),
        ))
    }

    /// Sampled group-law check; returns the report as a JSON string.
    #[pyo3(signature = (samples = 1000, seed = 0))]
    fn group_check(&self, samples: usize, seed: u64) -> PyResult<String> {
        let rep = run_group_check(&self.inner, samples, seed).map_err(err)?;
        serde_json::to_string_pretty(&rep).map_err(err)
    }
}

/// Euclidean norm of exponential coordinates.
#[pyfunction]
fn euclidean_norm(p: Vec<f64>) -> f64 {
    carnot_core::group::euclidean_norm(&Point::new(p))
}

/// Parse an expression and return its canonical printed form.
#[pyfunction]
fn parse_expr(text: &str) -> PyResult<String> {
    Ok(expr::parse(text).map_err(err)?.to_string())
}

/// Evaluate an expression at coordinates x1..xn.
#[pyfunction]
fn eval_expr(text: &str, x: Vec<f64>) -> PyResult<f64> {
    expr::parse(text).map_err(err)?.evaluate(&x).map_err(err)
}

/// Symbolic derivative d/dx{var} (1-based), as a canonical string.
#[pyfunction]
fn diff_expr(text: &str, var: usize) -> PyResult<String> {
    if var == 0 {
        return Err(err("variables are 1-based"));
    }
    Ok(expr::parse(text)
        .map_err(err)?
        .differentiate(var - 1)
        .map_err(err)?
        .to_string())
}

fn config(text: &str) -> PyResult<ScenarioConfig> {
    ScenarioConfig::from_json(text).map_err(err)
}

/// Sup/inf convolution sweep from a scenario config; returns the
/// convergence report as JSON.
#[pyfunction]
fn convolve(config_json: &str) -> PyResult<String> {
    let out = scenario::run_convolve(&config(config_json)?).map_err(err)?;
    serde_json::to_string_pretty(&out.report).map_err(err)
}

/// Strict-supersolution perturbation from a scenario config (JSON report).
#[pyfunction]
fn perturb(config_json: &str) -> PyResult<String> {
    let out = scenario::run_perturb(&config(config_json)?).map_err(err)?;
    serde_json::to_string_pretty(&out.report).map_err(err)
}

/// Sampled operator structure check from a scenario config (JSON report).
#[pyfunction]
fn structure_check(config_json: &str) -> PyResult<String> {
    let rep = scenario::run_structure_check(&config(config_json)?).map_err(err)?;
    serde_json::to_string_pretty(&rep).map_err(err)
}

/// Full comparison-principle pipeline from a scenario config (JSON report).
#[pyfunction]
fn compare(config_json: &str) -> PyResult<String> {
    let out = scenario::run_compare(&config(config_json)?).map_err(err)?;
    serde_json::to_string_pretty(&out.report).map_err(err)
}

#[pymodule]
fn carnot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Group>()?;
    m.add_function(wrap_pyfunction!(euclidean_norm, m)?)?;
    m.add_function(wrap_pyfunction!(parse_expr, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    m.add_function(wrap_pyfunction!(diff_expr, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(structure_check, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
