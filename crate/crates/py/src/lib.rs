//! Python bindings. Weights are given as numbers, `"c:<v>"` / `"m:<q>"`
//! tokens, or callables of one float.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;

use stratint::catalog::{
    catalog_eval, catalog_second_moment, catalog_second_moment_trig, exact_second_moment,
};
use stratint::expansion::{ito_truncated, strat_truncated_k2, strat_truncated_k34};
use stratint::oracle::mc_mean_square_diff;
use stratint::{
    Basis, BasisKind, ExpansionKind, IntegralId, IntegralSpec, Interval, McConfig, NoiseSelector, Scheme, SdeProblem,
    Tag, WeightSpec,
};

fn err(e: stratint::Error) -> PyErr {
    match e {
        stratint::Error::Numerical(_) | stratint::Error::Serialization(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn interval(iv: (f64, f64)) -> PyResult<Interval> {
    Interval::new(iv.0, iv.1).map_err(err)
}

fn basis_kind(name: &str) -> PyResult<BasisKind> {
    match name.to_ascii_lowercase().as_str() {
        "legendre" => Ok(BasisKind::Legendre),
        "trig" | "trigonometric" => Ok(BasisKind::Trigonometric),
        other => Err(PyValueError::new_err(format!("unknown basis '{other}'"))),
    }
}

fn weight(obj: &Bound<'_, PyAny>, iv: &Interval) -> PyResult<WeightSpec> {
    if let Ok(v) = obj.extract::<f64>() {
        return Ok(WeightSpec::Constant(v));
    }
    if let Ok(s) = obj.extract::<String>() {
        let bad = || PyValueError::new_err(format!("bad weight token '{s}'"));
        if let Some(e) = s.strip_prefix("m:") {
            return Ok(WeightSpec::monomial(iv, e.parse().map_err(|_| bad())?));
        }
        return Ok(WeightSpec::Constant(s.strip_prefix("c:").unwrap_or(&s).parse().map_err(|_| bad())?));
    }
    if obj.is_callable() {
        let f: Py<PyAny> = obj.clone().unbind();
        let label = obj.repr().map(|r| r.to_string()).unwrap_or_else(|_| "callable".into());
        // a failing callback yields NaN, which the table computation rejects
        return Ok(WeightSpec::tabulated(label, move |s| {
            Python::attach(|py| f.call1(py, (s,)).and_then(|r| r.extract::<f64>(py)).unwrap_or(f64::NAN))
        }));
    }
    Err(PyValueError::new_err("weight must be a number, a token string or a callable"))
}

fn weights(objs: &Bound<'_, PyList>, iv: &Interval) -> PyResult<Vec<WeightSpec>> {
    objs.iter().map(|o| weight(&o, iv)).collect()
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Normalised Legendre polynomial `P_j(x)` on `[-1, 1]`.
#[pyfunction]
fn legendre(j: usize, x: f64) -> PyResult<f64> {
    stratint::basis::legendre_eval(j, x).map_err(err)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[pyfunction]
fn gauss_legendre(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let rule = stratint::basis::gauss_legendre(n).map_err(err)?;
    Ok(rule.mapped(-1.0, 1.0, 1).unzip())
}

/// Orthonormal basis function `φ_j(s)` on `interval`.
#[pyfunction]
#[pyo3(signature = (j, s, interval = (0.0, 1.0), basis = "legendre"))]
fn phi(j: usize, s: f64, interval: (f64, f64), basis: &str) -> PyResult<f64> {
    Basis::new(basis_kind(basis)?, self::interval(interval)?).phi(j, s).map_err(err)
}

#[pyclass(name = "CoefficientTable", frozen)]
struct PyTable(stratint::CoefficientTable);

#[pymethods]
impl PyTable {
    #[new]
    #[pyo3(signature = (weights, orders, interval = (0.0, 1.0), basis = "legendre", quad_points = None))]
    fn new(
        py: Python<'_>,
        weights: &Bound<'_, PyList>,
        orders: Vec<usize>,
        interval: (f64, f64),
        basis: &str,
        quad_points: Option<usize>,
    ) -> PyResult<Self> {
        let iv = self::interval(interval)?;
        let w = self::weights(weights, &iv)?;
        let b = Basis::new(basis_kind(basis)?, iv);
        let table = py.detach(|| stratint::CoefficientTable::compute(&b, &w, &orders, quad_points));
        Ok(PyTable(table.map_err(err)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        stratint::CoefficientTable::from_json(text).map(PyTable).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    /// `C` at `[j_1, .., j_k]`.
    fn get(&self, j: Vec<usize>) -> PyResult<f64> {
        self.0.get(&j).ok_or_else(|| PyValueError::new_err(format!("index {j:?} outside the table")))
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn orders(&self) -> Vec<usize> {
        self.0.orders().to_vec()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn trace_sum(&self, p: usize) -> PyResult<f64> {
        self.0.trace_sum(p).map_err(err)
    }

    fn sum_squares(&self) -> f64 {
        self.0.sum_squares()
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!("CoefficientTable(k={}, orders={:?})", self.0.k(), self.0.orders())
    }
}

#[pyclass(name = "GaussianPool", frozen)]
struct PyPool(stratint::GaussianPool);

#[pymethods]
impl PyPool {
    /// Keyed standard normals `ζ_j^{(i)}` for `i in 1..=m`, `j in 0..=p_max`.
    #[staticmethod]
    fn sample(seed: u64, m: usize, p_max: usize) -> PyResult<Self> {
        stratint::GaussianPool::sample(seed, m, p_max).map(PyPool).map_err(err)
    }

    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        stratint::GaussianPool::from_rows(rows).map(PyPool).map_err(err)
    }

    fn zeta(&self, i: usize, j: usize) -> PyResult<f64> {
        if i == 0 || i > self.0.m() || j > self.0.p_max() {
            return Err(PyValueError::new_err(format!("zeta({i}, {j}) outside the pool")));
        }
        Ok(self.0.zeta(i, j))
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn p_max(&self) -> usize {
        self.0.p_max()
    }
}

/// Truncated Itô or Stratonovich expansion for the noise indices `i_1 .. i_k`.
#[pyfunction]
#[pyo3(signature = (table, pool, indices, kind = "ito"))]
fn expand(table: &PyTable, pool: &PyPool, indices: Vec<usize>, kind: &str) -> PyResult<f64> {
    let sel = NoiseSelector::new(indices).map_err(err)?;
    let v = match kind.to_ascii_lowercase().as_str() {
        "ito" => ito_truncated(&table.0, &pool.0, &sel),
        "strat" | "stratonovich" => match table.0.k() {
            1 => ito_truncated(&table.0, &pool.0, &sel),
            2 => strat_truncated_k2(&table.0, &pool.0, &sel),
            _ => strat_truncated_k34(&table.0, &pool.0, &sel),
        },
        other => return Err(PyValueError::new_err(format!("unknown kind '{other}'"))),
    };
    Ok(v.map_err(err)?.value)
}

fn integral_id(tag: &str, indices: Option<Vec<usize>>) -> PyResult<IntegralId> {
    let t: Tag = tag.parse().map_err(err)?;
    IntegralId::new(t, indices.unwrap_or_else(|| (1..=t.arity()).collect())).map_err(err)
}

/// Closed-form Legendre expansion of a catalog integral such as `"I10"`.
#[pyfunction]
#[pyo3(signature = (tag, pool, q, indices = None, interval = (0.0, 1.0)))]
fn catalog_value(tag: &str, pool: &PyPool, q: usize, indices: Option<Vec<usize>>, interval: (f64, f64)) -> PyResult<f64> {
    catalog_eval(&integral_id(tag, indices)?, &self::interval(interval)?, &pool.0, q).map_err(err)
}

/// `E[I_q²]` of the truncated catalog integral; `q = None` gives the exact value.
#[pyfunction]
#[pyo3(signature = (tag, q = None, indices = None, interval = (0.0, 1.0), trig = false))]
fn catalog_moment(
    tag: &str,
    q: Option<usize>,
    indices: Option<Vec<usize>>,
    interval: (f64, f64),
    trig: bool,
) -> PyResult<f64> {
    let id = integral_id(tag, indices)?;
    let iv = self::interval(interval)?;
    match (q, trig) {
        (None, _) => Ok(exact_second_moment(id.tag, &iv)),
        (Some(q), false) => catalog_second_moment(&id, &iv, q).map_err(err),
        (Some(q), true) => catalog_second_moment_trig(&id, &iv, q).map_err(err),
    }
}

/// Mean square distance between a truncated expansion and the path oracle.
#[pyfunction]
#[pyo3(signature = (
    q, indices, weights = None, tag = None, basis = "legendre", kind = "ito",
    n_paths = 1000, n_steps = 10_000, seed = 0, interval = (0.0, 1.0),
))]
#[allow(clippy::too_many_arguments)]
fn mc_validate(
    py: Python<'_>,
    q: usize,
    indices: Vec<usize>,
    weights: Option<&Bound<'_, PyList>>,
    tag: Option<&str>,
    basis: &str,
    kind: &str,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    interval: (f64, f64),
) -> PyResult<Py<PyAny>> {
    let iv = self::interval(interval)?;
    let spec = match tag {
        Some(t) => IntegralSpec::Catalog { id: integral_id(t, Some(indices))? },
        None => {
            let w = match weights {
                Some(w) => self::weights(w, &iv)?,
                None => vec![WeightSpec::one(); indices.len()],
            };
            let kind = match kind.to_ascii_lowercase().as_str() {
                "ito" => ExpansionKind::Ito,
                "strat" | "stratonovich" => ExpansionKind::Stratonovich,
                other => return Err(PyValueError::new_err(format!("unknown kind '{other}'"))),
            };
            IntegralSpec::Series { basis: basis_kind(basis)?, weights: w, indices, kind }
        }
    };
    let cfg = McConfig { seed, n_paths, n_steps, interval: iv, q, spec };
    let report = py.detach(|| mc_mean_square_diff(&cfg)).map_err(err)?;
    json_to_py(py, &report.to_json().map_err(err)?)
}

/// Strong convergence study on `"gbm"` or the two-noise `"bilinear"` example.
#[pyfunction]
#[pyo3(signature = (
    scheme, steps, problem = "gbm", n_paths = 1000, seed = 0, q = None,
    mu = 1.5, sigma = 1.0, x0 = 1.0, interval = (0.0, 1.0),
))]
#[allow(clippy::too_many_arguments)]
fn strong_order(
    py: Python<'_>,
    scheme: &str,
    steps: Vec<f64>,
    problem: &str,
    n_paths: usize,
    seed: u64,
    q: Option<usize>,
    mu: f64,
    sigma: f64,
    x0: f64,
    interval: (f64, f64),
) -> PyResult<Py<PyAny>> {
    let iv = self::interval(interval)?;
    let scheme: Scheme = scheme.parse().map_err(err)?;
    let problem = match problem {
        "gbm" => SdeProblem::gbm(mu, sigma, x0, iv),
        "bilinear" => SdeProblem::bilinear_example(iv),
        other => return Err(PyValueError::new_err(format!("unknown problem '{other}'"))),
    };
    let report = py.detach(|| stratint::sde::strong_order(&problem, scheme, &steps, n_paths, seed, q)).map_err(err)?;
    json_to_py(py, &report.to_json().map_err(err)?)
}

#[pymodule]
fn stratint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyPool>()?;
    m.add_function(wrap_pyfunction!(legendre, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_legendre, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_value, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_moment, m)?)?;
    m.add_function(wrap_pyfunction!(mc_validate, m)?)?;
    m.add_function(wrap_pyfunction!(strong_order, m)?)?;
    Ok(())
}
