//! Python bindings for projclust.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use projclust_core::bounds::{
    bayes_error_lower_bound, expected_projections_spherical, hd_bayes_error_bound,
    kgmm_failure_bound, optimize_tau, sample_size_required, spherical_direction_prob,
};
use projclust_core::clusterer::{self, ClusterConfig};
use projclust_core::datagen::{self, Shape};
use projclust_core::experiment::{self, ExperimentConfig, ExperimentKind};
use projclust_core::learner1d::{self, Method};
use projclust_core::{io, mathkit, Matrix, Provenance, RngStream};

fn to_py(e: projclust_core::Error) -> PyErr {
    match e {
        projclust_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let items = xs
                .iter()
                .map(|x| json_to_py(py, x))
                .collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report_to_py<'py>(
    py: Python<'py>,
    value: &impl serde::Serialize,
) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| to_py(e.into()))?;
    json_to_py(py, &v)
}

fn parse_method(s: &str) -> PyResult<Method> {
    s.parse().map_err(to_py)
}

/// Two-component 1-D Gaussian mixture.
#[pyclass(name = "Mixture1D", from_py_object)]
#[derive(Clone)]
struct PyMixture1D {
    inner: projclust_core::Mixture1D,
}

#[pymethods]
impl PyMixture1D {
    #[new]
    fn new(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, w: f64) -> PyResult<Self> {
        Ok(Self {
            inner: projclust_core::Mixture1D::new(mu1, mu2, sigma1, sigma2, w).map_err(to_py)?,
        })
    }

    #[getter]
    fn mu1(&self) -> f64 {
        self.inner.mu1
    }
    #[getter]
    fn mu2(&self) -> f64 {
        self.inner.mu2
    }
    #[getter]
    fn sigma1(&self) -> f64 {
        self.inner.sigma1
    }
    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }
    #[getter]
    fn w(&self) -> f64 {
        self.inner.w
    }

    fn separability(&self) -> f64 {
        projclust_core::projection::separability_1d(&self.inner)
    }

    fn bayes_error(&self) -> f64 {
        learner1d::bayes_error(&self.inner)
    }

    /// Thresholds of the optimal rule and the label of the leftmost region.
    fn thresholds(&self) -> PyResult<(Vec<f64>, usize)> {
        let rule = learner1d::bayes_thresholds(&self.inner).map_err(to_py)?;
        let left = rule.label_of(f64::NEG_INFINITY);
        Ok((rule.thresholds, left))
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!(
            "Mixture1D(mu1={}, mu2={}, sigma1={}, sigma2={}, w={})",
            m.mu1, m.mu2, m.sigma1, m.sigma2, m.w
        )
    }
}

/// Fit a two-component mixture to 1-D samples.
#[pyfunction]
#[pyo3(signature = (samples, method = "mom+em"))]
fn fit_1d(samples: Vec<f64>, method: &str) -> PyResult<PyMixture1D> {
    let report = learner1d::fit(&samples, parse_method(method)?).map_err(to_py)?;
    Ok(PyMixture1D {
        inner: report.fitted,
    })
}

#[pyclass(name = "MixtureSpec", from_py_object)]
#[derive(Clone)]
struct PyMixtureSpec {
    inner: projclust_core::MixtureSpec,
    rank: Option<usize>,
}

#[pymethods]
impl PyMixtureSpec {
    /// Two spherical components whose means differ along the first axis.
    #[staticmethod]
    #[pyo3(signature = (p, c, sigma = 1.0, w = 0.5))]
    fn spherical(p: usize, c: f64, sigma: f64, w: f64) -> PyResult<Self> {
        Ok(Self {
            inner: datagen::make_spherical_spec(p, c, sigma, w).map_err(to_py)?,
            rank: None,
        })
    }

    /// `k` equal-weight spherical components that are pairwise `c`-separable.
    #[staticmethod]
    #[pyo3(signature = (p, k, c, sigma = 1.0))]
    fn simplex(p: usize, k: usize, c: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: datagen::make_simplex_spec(p, k, c, sigma).map_err(to_py)?,
            rank: None,
        })
    }

    /// Low-rank pair with blocks of `ceil(zeta p)` coordinates.
    #[staticmethod]
    #[pyo3(signature = (p, c, zeta, seed = 0))]
    fn low_rank(p: usize, c: f64, zeta: f64, seed: u64) -> PyResult<Self> {
        let rs = datagen::make_rank_spec(p, c, zeta, &RngStream::new(seed, 1)).map_err(to_py)?;
        Ok(Self {
            inner: rs.spec,
            rank: Some(rs.r),
        })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    /// Rank of the covariance sum for low-rank specs.
    #[getter]
    fn rank(&self) -> Option<usize> {
        self.rank
    }

    #[pyo3(signature = (i = 0, j = 1))]
    fn c_separability(&self, i: usize, j: usize) -> PyResult<f64> {
        projclust_core::c_separability(&self.inner, i, j).map_err(to_py)
    }

    /// Separability of components `i` and `j` along `direction`.
    #[pyo3(signature = (direction, i = 0, j = 1))]
    fn projected(&self, direction: Vec<f64>, i: usize, j: usize) -> PyResult<PyMixture1D> {
        let inner = projclust_core::projection::projected_mixture(&self.inner, &direction, i, j)
            .map_err(to_py)?;
        Ok(PyMixture1D { inner })
    }

    #[pyo3(signature = (n, seed = 0, shape = "gaussian"))]
    fn sample(&self, n: usize, seed: u64, shape: &str) -> PyResult<PyDataset> {
        let stream = RngStream::new(seed, 0);
        let data = match shape.parse::<Shape>().map_err(to_py)? {
            Shape::Gaussian => datagen::sample_dataset(&self.inner, n, &stream),
            other => datagen::sample_nongaussian_dataset(&self.inner, other, n, &stream),
        }
        .map_err(to_py)?;
        Ok(PyDataset { inner: data })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| to_py(e.into()))
    }
}

#[pyclass(name = "Dataset", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: projclust_core::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (points, labels = None))]
    fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> PyResult<Self> {
        let n = points.len();
        let p = points.first().map_or(0, Vec::len);
        if points.iter().any(|r| r.len() != p) {
            return Err(PyValueError::new_err("all rows must have the same length"));
        }
        let k = labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(2, |m| (m + 1).max(2));
        let matrix =
            Matrix::from_row_major(n, p, points.into_iter().flatten().collect()).map_err(to_py)?;
        let provenance = Provenance {
            seed: 0,
            generator: "external".into(),
            k,
        };
        Ok(Self {
            inner: projclust_core::Dataset::new(matrix, labels, provenance).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::read_dataset(path.as_ref()).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_dataset(&self.inner, path.as_ref(), Value::Null).map_err(to_py)?;
        Ok(())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }
    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels.clone()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n)
            .map(|j| self.inner.points.row(j).to_vec())
            .collect()
    }

    /// Values of every point along `direction` (not normalized).
    fn project(&self, direction: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(projclust_core::projection::project(&self.inner, &direction)
            .map_err(to_py)?
            .values)
    }
}

#[pyclass(name = "ClusterOutcome", from_py_object)]
#[derive(Clone)]
struct PyClusterOutcome {
    inner: projclust_core::ClusterOutcome,
}

#[pymethods]
impl PyClusterOutcome {
    #[getter]
    fn achieved(&self) -> bool {
        self.inner.achieved
    }
    #[getter]
    fn estimated_error(&self) -> f64 {
        self.inner.estimated_error
    }
    #[getter]
    fn gamma_hat(&self) -> f64 {
        self.inner.gamma_hat
    }
    #[getter]
    fn projections_used(&self) -> usize {
        self.inner.projections_used
    }
    #[getter]
    fn c_hat(&self) -> Option<f64> {
        self.inner.c_hat
    }
    #[getter]
    fn fitted(&self) -> PyMixture1D {
        PyMixture1D {
            inner: self.inner.fitted,
        }
    }
    #[getter]
    fn direction(&self) -> Vec<f64> {
        self.inner.boundary.direction.clone()
    }
    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.inner.boundary.thresholds.clone()
    }

    fn classify(&self, data: &PyDataset) -> PyResult<Vec<usize>> {
        clusterer::classify(&data.inner, &self.inner.boundary).map_err(to_py)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        report_to_py(py, &self.inner)
    }
}

/// Scan random directions until the estimated error drops below `error`.
#[pyfunction]
#[pyo3(signature = (data, error, budget = None, learner = "mom+em", seed = 0))]
fn cluster(
    data: &PyDataset,
    error: f64,
    budget: Option<usize>,
    learner: &str,
    seed: u64,
) -> PyResult<PyClusterOutcome> {
    let budget = match budget {
        Some(m) => m,
        None => clusterer::projections_budget_default(data.inner.p, false, error, None)
            .map_err(to_py)?,
    };
    let cfg = ClusterConfig {
        learner: parse_method(learner)?,
        seed,
        ..ClusterConfig::new(error, budget)
    };
    let inner = clusterer::cluster_gmm(&data.inner, &cfg).map_err(to_py)?;
    Ok(PyClusterOutcome { inner })
}

/// Fraction of points whose predicted label differs from `truth`, up to a label swap.
#[pyfunction]
fn clustering_error(predicted: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    clusterer::clustering_error(&predicted, &truth).map_err(to_py)
}

#[pyfunction]
fn q_function(x: f64) -> PyResult<f64> {
    mathkit::q_function(x).map_err(to_py)
}

#[pyfunction]
fn q_inverse(e: f64) -> PyResult<f64> {
    mathkit::q_inverse(e).map_err(to_py)
}

#[pyfunction]
fn hd_error_bound(py: Python<'_>, c: f64, p: usize) -> PyResult<Bound<'_, PyAny>> {
    report_to_py(py, &hd_bayes_error_bound(c, p).map_err(to_py)?)
}

/// Lower bound on the probability of a `gamma`-separable direction; `tau` is optimized when omitted.
#[pyfunction]
#[pyo3(signature = (gamma, c, p, tau = None))]
fn direction_prob(
    py: Python<'_>,
    gamma: f64,
    c: f64,
    p: usize,
    tau: Option<f64>,
) -> PyResult<Bound<'_, PyAny>> {
    let report = match tau {
        Some(t) => spherical_direction_prob(gamma, c, p, t),
        None => optimize_tau(|t| spherical_direction_prob(gamma, c, p, t)).map(|(_, r)| r),
    }
    .map_err(to_py)?;
    report_to_py(py, &report)
}

/// Expected projections until a `gamma`-separable direction; asymptotic when `p` is None.
#[pyfunction]
#[pyo3(signature = (gamma, c, p = None))]
fn expected_projections(
    py: Python<'_>,
    gamma: f64,
    c: f64,
    p: Option<usize>,
) -> PyResult<Bound<'_, PyAny>> {
    report_to_py(
        py,
        &expected_projections_spherical(gamma, c, p).map_err(to_py)?,
    )
}

#[pyfunction]
fn kgmm_failure(
    py: Python<'_>,
    gamma_min: f64,
    c_min: f64,
    k: usize,
    p: usize,
) -> PyResult<Bound<'_, PyAny>> {
    report_to_py(
        py,
        &kgmm_failure_bound(gamma_min, c_min, k, p).map_err(to_py)?,
    )
}

#[pyfunction]
fn bayes_error_lower(py: Python<'_>, w: f64, gamma: f64) -> PyResult<Bound<'_, PyAny>> {
    report_to_py(py, &bayes_error_lower_bound(w, gamma).map_err(to_py)?)
}

#[pyfunction]
fn sample_size(epsilon: f64, delta: f64, gamma_min: f64) -> PyResult<u64> {
    sample_size_required(epsilon, delta, gamma_min).map_err(to_py)
}

/// Run a named experiment and return its CSV table as text.
#[pyfunction]
#[pyo3(signature = (name, p = None, n = None, c = None, error = None, budget = None, repeats = None, seed = None, zeta = None, directions = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    name: &str,
    p: Option<Vec<usize>>,
    n: Option<usize>,
    c: Option<Vec<f64>>,
    error: Option<f64>,
    budget: Option<usize>,
    repeats: Option<usize>,
    seed: Option<u64>,
    zeta: Option<Vec<f64>>,
    directions: Option<usize>,
) -> PyResult<String> {
    let kind: ExperimentKind = name.parse().map_err(to_py)?;
    let d = ExperimentConfig::defaults(kind);
    let cfg = ExperimentConfig {
        p: p.unwrap_or(d.p),
        n: n.unwrap_or(d.n),
        c: c.unwrap_or(d.c),
        error: error.unwrap_or(d.error),
        budget: budget.unwrap_or(d.budget),
        repeats: repeats.unwrap_or(d.repeats),
        seed: seed.unwrap_or(d.seed),
        zeta: zeta.unwrap_or(d.zeta),
        directions: directions.unwrap_or(d.directions),
        ..d
    };
    let mut out = Vec::new();
    experiment::run_experiment(kind, &cfg, &mut out).map_err(to_py)?;
    String::from_utf8(out).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn projclust(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMixture1D>()?;
    m.add_class::<PyMixtureSpec>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyClusterOutcome>()?;
    m.add_function(wrap_pyfunction!(fit_1d, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_error, m)?)?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(q_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(hd_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(direction_prob, m)?)?;
    m.add_function(wrap_pyfunction!(expected_projections, m)?)?;
    m.add_function(wrap_pyfunction!(kgmm_failure, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_error_lower, m)?)?;
    m.add_function(wrap_pyfunction!(sample_size, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
