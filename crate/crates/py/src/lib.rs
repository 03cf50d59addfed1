//! Python bindings for the roydennet library.
//!
//! The module mirrors the CLI surface at function granularity: build or
//! parse a space, extract a separated net, move scalar fields across the
//! two sides, solve p-Dirichlet problems, and run the verification checks.
//! Scalar fields travel as plain `dict[int, float]` keyed by vertex or net
//! point id; reports come back as the same JSON-shaped dictionaries the CLI
//! writes to disk.

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use roydennet::dirichlet::{
    royden_split, DirichletProblem, EnergySpec, SolveOptions, SweepMode,
};
use roydennet::net::KappaNet;
use roydennet::transfer::{build_partition, ScalarField};
use roydennet::verify::{run_named, SuiteReport};
use roydennet::ProxySpace;

fn py_err(e: roydennet::Error) -> PyErr {
    match &e {
        roydennet::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serializable report into nested Python dicts/lists.
fn report_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyValueError::new_err(format!("report serialization failed: {e}")))?;
    json_to_py(py, &json)
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

/// Lays out an id-keyed field densely in the space's vertex order.
fn dense_on_space(space: &ProxySpace, values: &BTreeMap<u64, f64>) -> PyResult<Vec<f64>> {
    if values.len() != space.len() {
        return Err(PyValueError::new_err(format!(
            "field carries {} values but the space has {} vertices",
            values.len(),
            space.len()
        )));
    }
    let mut dense = vec![f64::NAN; space.len()];
    for (&id, &v) in values {
        let i = space.index_of(id).map_err(py_err)?;
        dense[i] = v;
    }
    Ok(dense)
}

fn dense_on_net(net: &KappaNet, values: &BTreeMap<u64, f64>) -> PyResult<Vec<f64>> {
    if values.len() != net.len() {
        return Err(PyValueError::new_err(format!(
            "field carries {} values but the net has {} points",
            values.len(),
            net.len()
        )));
    }
    let mut dense = vec![f64::NAN; net.len()];
    for (&id, &v) in values {
        let pos = net.pos_of_id(id).map_err(py_err)?;
        dense[pos] = v;
    }
    Ok(dense)
}

fn keyed_by_ids(ids: &[u64], dense: &[f64]) -> BTreeMap<u64, f64> {
    ids.iter().copied().zip(dense.iter().copied()).collect()
}

fn energy_spec(p: f64, mode: Option<&str>, space: &ProxySpace) -> PyResult<EnergySpec> {
    match mode {
        None => EnergySpec::for_space(p, space).map_err(py_err),
        Some("combinatorial") => EnergySpec::combinatorial(p).map_err(py_err),
        Some("length-weighted") => EnergySpec::length_weighted(p).map_err(py_err),
        Some(other) => Err(PyValueError::new_err(format!(
            "unknown energy mode {other:?}; pass \"combinatorial\", \"length-weighted\", or None"
        ))),
    }
}

fn solve_options(
    tol: f64,
    max_sweeps: usize,
    sweep: &str,
    init: Option<Vec<f64>>,
) -> PyResult<SolveOptions> {
    if !(tol > 0.0) {
        return Err(PyValueError::new_err(format!(
            "tolerance must be positive (got {tol})"
        )));
    }
    let mode = match sweep {
        "gauss-seidel" => SweepMode::GaussSeidel,
        "jacobi" => SweepMode::Jacobi,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown sweep mode {other:?}; pass \"gauss-seidel\" or \"jacobi\""
            )))
        }
    };
    Ok(SolveOptions {
        tol,
        max_sweeps,
        mode,
        init,
    })
}

/// A weighted graph or mesh: the host every other object hangs off.
#[pyclass(module = "roydennet_py")]
struct Space {
    inner: Arc<ProxySpace>,
}

#[pymethods]
impl Space {
    /// Parses the text format the CLI reads and writes.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Space> {
        Ok(Space {
            inner: Arc::new(ProxySpace::parse(text).map_err(py_err)?),
        })
    }

    /// Unit-edge path on `n` vertices.
    #[staticmethod]
    fn path(n: usize) -> PyResult<Space> {
        Ok(Space {
            inner: Arc::new(roydennet::generate::path(n).map_err(py_err)?),
        })
    }

    /// `nx` by `ny` grid with unit edges.
    #[staticmethod]
    fn lattice2d(nx: usize, ny: usize) -> PyResult<Space> {
        Ok(Space {
            inner: Arc::new(roydennet::generate::lattice2d(nx, ny).map_err(py_err)?),
        })
    }

    /// Rooted tree in which every vertex has the given degree.
    #[staticmethod]
    fn regular_tree(degree: usize, depth: usize) -> PyResult<Space> {
        Ok(Space {
            inner: Arc::new(roydennet::generate::regular_tree(degree, depth).map_err(py_err)?),
        })
    }

    /// Triangulated disk with hyperbolic edge lengths and area weights.
    #[staticmethod]
    #[pyo3(signature = (rings, delta = 0.48))]
    fn hyperbolic_disk_mesh(rings: usize, delta: f64) -> PyResult<Space> {
        Ok(Space {
            inner: Arc::new(
                roydennet::generate::hyperbolic_disk_mesh(rings, delta).map_err(py_err)?,
            ),
        })
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edges().len()
    }

    #[getter]
    fn kind(&self) -> String {
        match self.inner.kind() {
            roydennet::SpaceKind::CombinatorialGraph => "combinatorial-graph".into(),
            roydennet::SpaceKind::ManifoldProxy => "manifold-proxy".into(),
        }
    }

    #[getter]
    fn degree_bound(&self) -> usize {
        self.inner.degree_bound()
    }

    #[getter]
    fn total_volume(&self) -> f64 {
        self.inner.total_volume()
    }

    /// Vertex ids in storage order.
    fn ids(&self) -> Vec<u64> {
        self.inner.ids().to_vec()
    }

    /// Shortest-path distance between two vertices.
    fn distance(&self, a: u64, b: u64) -> PyResult<f64> {
        let i = self.inner.index_of(a).map_err(py_err)?;
        let j = self.inner.index_of(b).map_err(py_err)?;
        Ok(self.inner.distances_from(i)[j])
    }

    /// Total vertex weight of the closed ball around `center`.
    fn ball_volume(&self, center: u64, radius: f64) -> PyResult<f64> {
        let i = self.inner.index_of(center).map_err(py_err)?;
        Ok(self.inner.ball_volume_idx(i, radius))
    }

    fn diameter_estimate(&self) -> f64 {
        self.inner.diameter_estimate()
    }

    /// Serializes back to the CLI text format.
    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Space(kind={}, vertices={}, edges={})",
            self.kind(),
            self.inner.len(),
            self.inner.edges().len()
        )
    }
}

/// A maximal κ-separated net over a space, with its coarse adjacency.
#[pyclass(module = "roydennet_py")]
struct Net {
    inner: Arc<KappaNet>,
}

#[pymethods]
impl Net {
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    #[getter]
    fn degree_bound(&self) -> usize {
        self.inner.degree_bound()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings().to_vec()
    }

    /// Net point ids, ascending.
    fn points(&self) -> Vec<u64> {
        self.inner.ids().to_vec()
    }

    /// Net adjacency as `{id: [neighbor ids]}`.
    fn adjacency(&self) -> BTreeMap<u64, Vec<u64>> {
        self.inner.adjacency_ids()
    }

    /// Re-checks every net invariant; returns the audit as a dict.
    fn audit(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        report_to_py(py, &self.inner.audit())
    }

    /// Largest number of net points in any closed `r`-ball of the space.
    fn bounded_geometry(&self, r: f64) -> PyResult<usize> {
        self.inner.bounded_geometry(r).map_err(py_err)
    }

    /// Fits distortion constants for the net inclusion and re-verifies them
    /// against every audited pair before returning them.
    fn distortion_certificate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let est = self.inner.estimate_qi().map_err(py_err)?;
        self.inner.verify_qi(&est).map_err(py_err)?;
        report_to_py(py, &est)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Net(kappa={}, points={})",
            self.inner.kappa(),
            self.inner.len()
        )
    }
}

/// Greedily extracts a maximal κ-separated net from a space.
#[pyfunction]
#[pyo3(signature = (space, kappa, order=None, threshold=None))]
fn extract_net(
    space: &Space,
    kappa: f64,
    order: Option<Vec<u64>>,
    threshold: Option<f64>,
) -> PyResult<Net> {
    let net = roydennet::net::extract_net(&space.inner, kappa, order.as_deref(), threshold)
        .map_err(py_err)?;
    Ok(Net {
        inner: Arc::new(net),
    })
}

/// Extends a net field to the whole space through the partition of unity.
#[pyfunction]
fn smooth(net: &Net, values: BTreeMap<u64, f64>) -> PyResult<BTreeMap<u64, f64>> {
    let dense = dense_on_net(&net.inner, &values)?;
    let pou = build_partition(&net.inner).map_err(py_err)?;
    let out = roydennet::transfer::smooth(&pou, &ScalarField::on_net(dense)).map_err(py_err)?;
    Ok(keyed_by_ids(net.inner.space().ids(), &out.values))
}

/// Restricts a space field to the net by volume-weighted ball averages.
#[pyfunction]
fn discretize(net: &Net, values: BTreeMap<u64, f64>) -> PyResult<BTreeMap<u64, f64>> {
    let dense = dense_on_space(net.inner.space(), &values)?;
    let out =
        roydennet::transfer::discretize(&net.inner, &ScalarField::on_proxy(dense)).map_err(py_err)?;
    Ok(keyed_by_ids(net.inner.ids(), &out.values))
}

/// p-energy of a full field; `mode=None` uses the space kind's convention.
#[pyfunction]
#[pyo3(signature = (space, p, values, mode=None))]
fn energy(space: &Space, p: f64, values: BTreeMap<u64, f64>, mode: Option<&str>) -> PyResult<f64> {
    let spec = energy_spec(p, mode, &space.inner)?;
    let dense = dense_on_space(&space.inner, &values)?;
    Ok(roydennet::dirichlet::energy_p(&space.inner, &spec, &dense))
}

/// Solves the p-Dirichlet problem for the given boundary data and returns
/// `{"values", "sweeps", "final_residual", "energy", "min", "max"}`.
#[pyfunction]
#[pyo3(signature = (space, p, boundary, tol=1e-8, max_sweeps=100_000, sweep="gauss-seidel",
                    mode=None, init=None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    space: &Space,
    p: f64,
    boundary: BTreeMap<u64, f64>,
    tol: f64,
    max_sweeps: usize,
    sweep: &str,
    mode: Option<&str>,
    init: Option<BTreeMap<u64, f64>>,
) -> PyResult<Py<PyAny>> {
    let spec = energy_spec(p, mode, &space.inner)?;
    let pairs: Vec<(u64, f64)> = boundary.into_iter().collect();
    let init_dense = match init {
        Some(map) => Some(dense_on_space(&space.inner, &map)?),
        None => None,
    };
    let opts = solve_options(tol, max_sweeps, sweep, init_dense)?;
    let problem = DirichletProblem::new(space.inner.clone(), spec, &pairs).map_err(py_err)?;
    let sol = problem.solve(&opts).map_err(py_err)?;

    let dict = PyDict::new(py);
    dict.set_item("values", keyed_by_ids(space.inner.ids(), &sol.values))?;
    dict.set_item("sweeps", sol.sweeps)?;
    dict.set_item("final_residual", sol.final_residual)?;
    dict.set_item("energy", sol.energy)?;
    dict.set_item("min", sol.min)?;
    dict.set_item("max", sol.max)?;
    dict.into_py_any(py)
}

/// Splits a field into p-harmonic and potential parts over growing balls.
#[pyfunction]
#[pyo3(signature = (space, p, values, base, radii, tol=1e-8, max_sweeps=100_000, mode=None))]
#[allow(clippy::too_many_arguments)]
fn decompose(
    py: Python<'_>,
    space: &Space,
    p: f64,
    values: BTreeMap<u64, f64>,
    base: u64,
    radii: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
    mode: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let spec = energy_spec(p, mode, &space.inner)?;
    let dense = dense_on_space(&space.inner, &values)?;
    let opts = solve_options(tol, max_sweeps, "gauss-seidel", None)?;
    let split = royden_split(&space.inner, &dense, spec, base, &radii, &opts).map_err(py_err)?;

    let ids = space.inner.ids();
    let stages = PyList::empty(py);
    for stage in &split.stages {
        let entry = PyDict::new(py);
        entry.set_item("radius", stage.radius)?;
        entry.set_item("interior", stage.interior)?;
        entry.set_item("h", keyed_by_ids(ids, &stage.h))?;
        entry.set_item("u", keyed_by_ids(ids, &stage.u))?;
        entry.set_item("energy_h", stage.energy_h)?;
        entry.set_item("energy_u", stage.energy_u)?;
        entry.set_item("sup_h_change", stage.sup_h_change)?;
        entry.set_item("sweeps", stage.sweeps)?;
        entry.set_item("final_residual", stage.final_residual)?;
        stages.append(entry)?;
    }
    let dict = PyDict::new(py);
    dict.set_item("base", split.base)?;
    dict.set_item("radii", split.radii)?;
    dict.set_item("stages", stages)?;
    dict.into_py_any(py)
}

/// Runs one verification check (or `"all"`) and returns its report dict.
#[pyfunction]
#[pyo3(signature = (check, space, kappa, p=2.0, seed=0, trials=32, tol=1e-10))]
fn verify(
    py: Python<'_>,
    check: &str,
    space: &Space,
    kappa: f64,
    p: f64,
    seed: u64,
    trials: usize,
    tol: f64,
) -> PyResult<Py<PyAny>> {
    let net = roydennet::net::extract_net(&space.inner, kappa, None, None).map_err(py_err)?;
    let opts = solve_options(tol, 100_000, "gauss-seidel", None)?;
    let mut reports = run_named(&net, check, p, seed, trials, &opts).map_err(py_err)?;
    if check == "all" {
        report_to_py(py, &SuiteReport::new(reports))
    } else {
        report_to_py(py, &reports.remove(0))
    }
}

#[pymodule]
fn roydennet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space>()?;
    m.add_class::<Net>()?;
    m.add_function(wrap_pyfunction!(extract_net, m)?)?;
    m.add_function(wrap_pyfunction!(smooth, m)?)?;
    m.add_function(wrap_pyfunction!(discretize, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
