//! Python bindings for `kprop`.

use std::path::PathBuf;

use kp::io;
use kprop_core as kp;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: kp::Error) -> PyErr {
    match e {
        kp::Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn with_suffix(prefix: &str, ext: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{ext}"))
}

/// A K-partite graph with string vertex ids.
#[pyclass(module = "kprop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Graph {
    inner: kp::KPartiteGraph,
}

#[pymethods]
impl Graph {
    /// Reads `prefix.vertices` and `prefix.edges`.
    #[staticmethod]
    fn load(prefix: &str) -> PyResult<Self> {
        let inner = io::load_graph(&with_suffix(prefix, "vertices"), &with_suffix(prefix, "edges")).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn parse(vertices: &str, edges: &str) -> PyResult<Self> {
        let inner = io::parse_graph(vertices, edges, ("<vertices>", "<edges>")).map_err(err)?;
        Ok(Self { inner })
    }

    fn save(&self, prefix: &str) -> PyResult<()> {
        io::save_graph(&self.inner, &with_suffix(prefix, "vertices"), &with_suffix(prefix, "edges")).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn type_count(&self) -> usize {
        self.inner.type_count()
    }

    fn ids(&self, ty: usize) -> Vec<String> {
        self.inner.vertices().filter(|u| u.ty == ty).map(|u| self.inner.id(u).to_string()).collect()
    }

    /// Returns the graph after applying `delta`.
    fn apply(&self, delta: &Delta) -> PyResult<Graph> {
        let out = kp::apply_delta(&self.inner, &delta.inner).map_err(err)?;
        Ok(Graph { inner: out.graph })
    }

    fn __repr__(&self) -> String {
        format!("Graph(types={}, n={}, m={})", self.inner.type_count(), self.inner.n(), self.inner.m())
    }
}

/// Per-vertex label distributions (seeds or ground truth).
#[pyclass(module = "kprop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Labels {
    inner: kp::LabelTable,
}

#[pymethods]
impl Labels {
    #[staticmethod]
    #[pyo3(signature = (graph, path, k=None))]
    fn load(graph: &Graph, path: PathBuf, k: Option<usize>) -> PyResult<Self> {
        Ok(Self { inner: io::load_labels(&graph.inner, &path, k).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (graph, text, k=None))]
    fn parse(graph: &Graph, text: &str, k: Option<usize>) -> PyResult<Self> {
        Ok(Self { inner: io::parse_labels(&graph.inner, text, "<labels>", k).map_err(err)? })
    }

    /// Keeps the labeled vertices among the top `fraction` by degree.
    fn select_seeds(&self, graph: &Graph, fraction: f64) -> PyResult<Labels> {
        let (inner, _) = kp::select_seeds(&graph.inner, &self.inner, fraction).map_err(err)?;
        Ok(Labels { inner })
    }

    fn get(&self, graph: &Graph, ty: usize, id: &str) -> Option<Vec<f64>> {
        let u = graph.inner.vertex(ty, id)?;
        self.inner.get(u).map(<[f64]>::to_vec)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A batch of graph and label changes.
#[pyclass(module = "kprop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Delta {
    inner: kp::DeltaBatch,
}

#[pymethods]
impl Delta {
    #[new]
    fn empty() -> Self {
        Self { inner: kp::DeltaBatch::default() }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: io::load_delta(&path).map_err(err)? })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: io::parse_delta(text, "<delta>").map_err(err)? })
    }

    fn to_text(&self) -> String {
        io::delta_to_string(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.ops.len()
    }
}

/// Inferred label scores, propagation matrices and the seeds they came from.
#[pyclass(module = "kprop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Snapshot {
    inner: kp::Snapshot,
}

#[pymethods]
impl Snapshot {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: kp::Snapshot::load(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Score row of one vertex.
    fn scores(&self, graph: &Graph, ty: usize, id: &str) -> PyResult<Vec<f64>> {
        self.inner.labels.check_shape(&graph.inner).map_err(err)?;
        let u = graph.inner.vertex(ty, id).ok_or_else(|| PyValueError::new_err(format!("unknown vertex {ty}:{id}")))?;
        Ok(self.inner.labels.row(u).to_vec())
    }

    /// Propagation matrix between types `lo < hi`, as nested lists.
    fn propagation(&self, lo: usize, hi: usize) -> PyResult<Vec<Vec<f64>>> {
        let types = self.inner.propagation.type_count();
        if !(lo < hi && hi < types) {
            return Err(PyValueError::new_err(format!("need lo < hi < {types}")));
        }
        let b = self.inner.propagation.pair(lo, hi);
        let k = self.inner.propagation.k();
        Ok((0..k).map(|i| (0..k).map(|j| b.get(i, j)).collect()).collect())
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.labels.k()
    }

    #[getter]
    fn seeds(&self) -> Labels {
        Labels { inner: self.inner.seeds.clone() }
    }
}

/// Runs full inference and returns the snapshot and the objective per iteration.
#[pyfunction]
#[pyo3(signature = (graph, seeds, rule="mult", b_mode="full", beta=5.0, lambda_=0.0, tol=1e-6, max_iter=100, workers=0))]
#[allow(clippy::too_many_arguments)]
fn infer(
    py: Python<'_>,
    graph: &Graph,
    seeds: &Labels,
    rule: &str,
    b_mode: &str,
    beta: f64,
    lambda_: f64,
    tol: f64,
    max_iter: usize,
    workers: usize,
) -> PyResult<(Snapshot, Vec<f64>)> {
    let rule: kp::UpdateRule = rule.parse().map_err(err)?;
    let b_mode: kp::BMode = b_mode.parse().map_err(err)?;
    let config =
        kp::InferenceConfig { rule, b_mode, beta, lambda: lambda_, tol, max_iter, workers, ..Default::default() };
    let out = py.detach(|| kp::run_inference(&graph.inner, &seeds.inner, &config, &[])).map_err(err)?;
    let objectives = out.trace.objectives();
    let inner = kp::Snapshot {
        labels: out.labels,
        propagation: out.propagation,
        seeds: seeds.inner.clone(),
        b_mode,
        rule,
        beta,
    };
    Ok((Snapshot { inner }, objectives))
}

fn incremental_config(snapshot: &kp::Snapshot, theta: f64, max_rounds: usize, tol: f64) -> kp::IncrementalConfig {
    kp::IncrementalConfig {
        theta,
        max_rounds,
        tol,
        refresh_b: false,
        inference: kp::InferenceConfig {
            rule: snapshot.rule,
            beta: snapshot.beta,
            b_mode: snapshot.b_mode,
            ..Default::default()
        },
    }
}

/// Applies `delta` incrementally; returns the new snapshot, the new graph
/// and the number of rows re-solved.
#[pyfunction]
#[pyo3(signature = (graph, snapshot, delta, theta=0.5, max_rounds=100, tol=1e-6))]
fn update(
    py: Python<'_>,
    graph: &Graph,
    snapshot: &Snapshot,
    delta: &Delta,
    theta: f64,
    max_rounds: usize,
    tol: f64,
) -> PyResult<(Snapshot, Graph, usize)> {
    let config = incremental_config(&snapshot.inner, theta, max_rounds, tol);
    let upd = py.detach(|| kp::update_snapshot(&graph.inner, &snapshot.inner, &delta.inner, &config)).map_err(err)?;
    let touched = upd.incremental.touched();
    let snap = upd.snapshot(&snapshot.inner);
    Ok((Snapshot { inner: snap }, Graph { inner: upd.delta.graph }, touched))
}

/// Scores incremental update against recompute; returns a dict.
#[pyfunction]
#[pyo3(signature = (graph, snapshot, delta, theta=0.5, us=60.0, ua=100.0, threshold=200.0))]
#[allow(clippy::too_many_arguments)]
fn decide<'py>(
    py: Python<'py>,
    graph: &Graph,
    snapshot: &Snapshot,
    delta: &Delta,
    theta: f64,
    us: f64,
    ua: f64,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = incremental_config(&snapshot.inner, theta, 100, 1e-6);
    let params = kp::UtilityParams { u_s: us, u_a: ua, threshold };
    let (report, _) =
        py.detach(|| kp::decide(&graph.inner, &snapshot.inner, &delta.inner, &config, &params)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("gain", report.gain)?;
    d.set_item("loss_new", report.loss_new)?;
    d.set_item("loss_fixed", report.loss_fixed)?;
    d.set_item("utility", report.utility)?;
    d.set_item("recommendation", report.recommendation.to_string())?;
    Ok(d)
}

/// Accuracy, BER and contingency counts against `truth`.
#[pyfunction]
#[pyo3(signature = (graph, snapshot, truth, include_seeds=false))]
fn evaluate<'py>(
    py: Python<'py>,
    graph: &Graph,
    snapshot: &Snapshot,
    truth: &Labels,
    include_seeds: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let s = &snapshot.inner;
    let report = kp::evaluate(&graph.inner, &s.labels, &truth.inner, &s.seeds, include_seeds).map_err(err)?;
    let c = &report.contingency;
    let counts: Vec<Vec<u64>> = (0..c.k()).map(|i| c.row(i).to_vec()).collect();
    let d = PyDict::new(py);
    d.set_item("accuracy", report.accuracy)?;
    d.set_item("ber", report.ber)?;
    d.set_item("evaluated", report.evaluated)?;
    d.set_item("contingency", counts)?;
    Ok(d)
}

/// Generates a planted instance from spec text; returns (graph, truth).
#[pyfunction]
fn generate(spec: &str) -> PyResult<(Graph, Labels)> {
    let spec = kp::PlantedSpec::parse(spec).map_err(err)?;
    let p = kp::generate_planted(&spec).map_err(err)?;
    Ok((Graph { inner: p.graph }, Labels { inner: p.truth }))
}

#[pymodule]
#[pyo3(name = "kprop")]
fn kprop_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Labels>()?;
    m.add_class::<Delta>()?;
    m.add_class::<Snapshot>()?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(update, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
