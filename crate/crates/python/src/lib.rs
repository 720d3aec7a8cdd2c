//! Python bindings: anisotropies, grids and sets, single ATW steps, whole flat
//! flows, the front-tracking oracle and the check suite.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use capflow::config::RunConfig;
use capflow::graphcut::Select;
use capflow::gridset::{BinarySet, GridDomain};
use capflow::oracle2d::{run_front, FrontOptions, SmoothCurve};
use capflow::shapes::{isoperimetric_constant, winterbottom_constant};
use capflow::stepper::{minimize_step, run_flat_flow, ContactAngleField, FlatFlowState, ForcingField, Scheme};
use capflow::verify::{run_checks, run_flows, CheckReport};

create_exception!(capflow, CapflowError, PyException);

fn err(e: capflow::Error) -> PyErr {
    CapflowError::new_err(e.to_string())
}

fn select(name: &str) -> PyResult<Select> {
    match name {
        "minimal" => Ok(Select::Minimal),
        "maximal" => Ok(Select::Maximal),
        "any" => Ok(Select::Any),
        other => Err(CapflowError::new_err(format!("unknown selection '{other}' (minimal, maximal, any)"))),
    }
}

/// A norm Φ on ℝⁿ.
#[pyclass(name = "Anisotropy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAnisotropy(capflow::Anisotropy);

#[pymethods]
impl PyAnisotropy {
    #[staticmethod]
    #[pyo3(signature = (n = 2))]
    fn euclidean(n: usize) -> PyResult<Self> {
        capflow::Anisotropy::euclidean(n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn diag(d: Vec<f64>) -> PyResult<Self> {
        capflow::Anisotropy::diag(&d).map(Self).map_err(err)
    }

    /// Φ(x) = |Ax| for a symmetric positive definite A.
    #[staticmethod]
    fn linear_map(a: Vec<Vec<f64>>) -> PyResult<Self> {
        capflow::Anisotropy::linear_map(a).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (eps, n = 2))]
    fn smoothed_l1(eps: f64, n: usize) -> PyResult<Self> {
        capflow::Anisotropy::smoothed_l1(n, eps).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.eval(&x).map_err(err)
    }

    fn dual_value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.dual().eval(&x).map_err(err)
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.gradient(&x).map_err(err)
    }

    /// Φ(e_n).
    fn vertical(&self) -> f64 {
        self.0.vertical()
    }

    #[pyo3(signature = (resolution = 512))]
    fn certify_ellipticity<'py>(&self, py: Python<'py>, resolution: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = self.0.certify_ellipticity(resolution).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("elliptic", r.elliptic)?;
        d.set_item("gamma", r.gamma)?;
        d.set_item("smooth", r.smooth)?;
        d.set_item("wulff_curvature", r.wulff_curvature)?;
        d.set_item("agreement", r.agreement)?;
        Ok(d)
    }

    #[pyo3(signature = (resolution = 4096))]
    fn isoperimetric_constant(&self, resolution: usize) -> PyResult<f64> {
        isoperimetric_constant(&self.0, resolution).map_err(err)
    }

    #[pyo3(signature = (beta0, resolution = 4096))]
    fn winterbottom_constant(&self, beta0: f64, resolution: usize) -> PyResult<f64> {
        winterbottom_constant(&self.0, beta0, resolution).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Anisotropy({:?})", self.0.kind())
    }
}

/// The box [−w, w]^{n−1} × [0, height] divided into cubes of side h.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(Arc<GridDomain>);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (half_width, height, h, dim = 2))]
    fn new(half_width: f64, height: f64, h: f64, dim: usize) -> PyResult<Self> {
        GridDomain::centered(dim, half_width, height, h).map(|g| Self(Arc::new(g))).map_err(err)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn counts(&self) -> Vec<usize> {
        self.0.counts().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn center(&self, idx: usize) -> PyResult<Vec<f64>> {
        if idx >= self.0.len() {
            return Err(CapflowError::new_err(format!("cell {idx} out of range")));
        }
        Ok(self.0.center(idx)[..self.0.dim()].to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Grid(counts={:?}, h={})", self.0.counts(), self.0.h())
    }
}

/// A union of grid cells (x-major, floor row first).
#[pyclass(name = "BinarySet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySet(BinarySet);

#[pymethods]
impl PySet {
    #[staticmethod]
    fn from_mask(grid: &PyGrid, mask: Vec<bool>) -> PyResult<Self> {
        if mask.len() != grid.0.len() {
            return Err(CapflowError::new_err(format!("mask has {} cells, grid has {}", mask.len(), grid.0.len())));
        }
        Ok(Self(BinarySet::from_indices(&grid.0, mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))))
    }

    /// Cells whose centres lie in the half-ball of radius r centred at (cx, 0).
    #[staticmethod]
    fn half_disk(grid: &PyGrid, cx: f64, r: f64) -> Self {
        Self(BinarySet::from_predicate(&grid.0, |x| (x[0] - cx).powi(2) + x[1] * x[1] < r * r))
    }

    fn to_mask(&self) -> Vec<bool> {
        (0..self.0.grid().len()).map(|i| self.0.get(i)).collect()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn count(&self) -> usize {
        self.0.count()
    }

    fn volume(&self) -> f64 {
        self.0.volume()
    }

    /// Measure of the wetted floor.
    fn contact_measure(&self) -> f64 {
        self.0.contact_measure()
    }

    fn is_subset_of(&self, other: &PySet) -> PyResult<bool> {
        self.0.is_subset_of(&other.0).map_err(err)
    }

    fn symmetric_difference_measure(&self, other: &PySet) -> PyResult<f64> {
        self.0.symmetric_difference_measure(&other.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("BinarySet(cells={}, volume={})", self.0.count(), self.0.volume())
    }
}

/// Anisotropy, constant contact-angle coefficient and constant forcing on a grid.
#[pyclass(name = "Scheme", frozen)]
struct PyScheme(Scheme);

#[pymethods]
impl PyScheme {
    #[new]
    #[pyo3(signature = (grid, anisotropy, beta = 0.0, forcing = 0.0))]
    fn new(grid: &PyGrid, anisotropy: &PyAnisotropy, beta: f64, forcing: f64) -> PyResult<Self> {
        let field = ContactAngleField::constant(&grid.0, &anisotropy.0, beta).map_err(err)?;
        Scheme::new(&grid.0, &anisotropy.0, field, ForcingField::Constant(forcing)).map(Self).map_err(err)
    }
}

/// A discrete flat flow E(τ, 0), …, E(τ, K).
#[pyclass(name = "FlatFlow", frozen)]
struct PyFlow(FlatFlowState);

#[pymethods]
impl PyFlow {
    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps()
    }

    fn set(&self, k: usize) -> PyResult<PySet> {
        self.0.sets.get(k).cloned().map(PySet).ok_or_else(|| CapflowError::new_err(format!("no step {k}")))
    }

    /// E(τ, ⌊t/τ⌋).
    fn at_time(&self, t: f64) -> PyResult<PySet> {
        if !self.0.covers(t) {
            return Err(CapflowError::new_err(format!("the flow does not reach t = {t}")));
        }
        Ok(PySet(self.0.at_time(t).clone()))
    }

    fn volumes(&self) -> Vec<f64> {
        self.0.records.iter().map(|r| r.volume).collect()
    }

    /// One dict of diagnostics per step, k = 0 first.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("k", r.k)?;
                d.set_item("t", r.t)?;
                d.set_item("volume", r.volume)?;
                d.set_item("perimeter_phi", r.perimeter_phi)?;
                d.set_item("capillary", r.capillary)?;
                d.set_item("dissipation", r.dissipation)?;
                d.set_item("forcing", r.forcing)?;
                d.set_item("total", r.total)?;
                d.set_item("max_flip_distance", r.max_flip_distance)?;
                d.set_item("contact", r.contact)?;
                Ok(d)
            })
            .collect()
    }

    #[getter]
    fn truncated(&self) -> Option<usize> {
        self.0.truncated
    }
}

/// One ATW step from `e0`; ties are broken by `select`.
#[pyfunction]
#[pyo3(signature = (e0, tau, scheme, k = 1, select = "minimal"))]
fn step(py: Python<'_>, e0: &PySet, tau: f64, scheme: &PyScheme, k: usize, select: &str) -> PyResult<PySet> {
    let sel = self::select(select)?;
    py.detach(|| minimize_step(&e0.0, tau, k, &scheme.0, sel)).map(|r| PySet(r.set)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (e0, tau, t_end, scheme, select = "minimal"))]
fn flat_flow(py: Python<'_>, e0: &PySet, tau: f64, t_end: f64, scheme: &PyScheme, select: &str) -> PyResult<PyFlow> {
    let sel = self::select(select)?;
    py.detach(|| run_flat_flow(&e0.0, tau, t_end, &scheme.0, sel)).map(PyFlow).map_err(err)
}

/// Runs every τ of a configuration file, coarsest first.
#[pyfunction]
fn simulate(py: Python<'_>, config: PathBuf) -> PyResult<Vec<PyFlow>> {
    py.detach(|| {
        let cfg = RunConfig::from_file(&config)?;
        run_flows(&cfg, &cfg.scheme()?)
    })
    .map(|v| v.into_iter().map(PyFlow).collect())
    .map_err(err)
}

fn report_dict<'py>(py: Python<'py>, r: &CheckReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", &r.name)?;
    d.set_item("status", r.status.to_string())?;
    let m = PyDict::new(py);
    for x in &r.measurements {
        m.set_item(&x.name, (x.value, x.threshold))?;
    }
    d.set_item("measurements", m)?;
    d.set_item("notes", r.notes.clone())?;
    d.set_item("offenders", r.offenders.clone())?;
    Ok(d)
}

/// Runs the named checks (all of them when omitted) on a configuration file.
#[pyfunction]
#[pyo3(signature = (config, checks = None))]
fn verify<'py>(py: Python<'py>, config: PathBuf, checks: Option<Vec<String>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = py
        .detach(|| {
            let cfg = RunConfig::from_file(&config)?;
            let scheme = cfg.scheme()?;
            let flows = run_flows(&cfg, &scheme)?;
            let names = checks.unwrap_or_else(|| cfg.checks.clone());
            run_checks(&cfg, &scheme, &flows, &names)
        })
        .map_err(err)?;
    reports.iter().map(|r| report_dict(py, r)).collect()
}

/// Front tracking from the half circle of radius r centred at (cx, 0) under a
/// constant contact-angle coefficient and forcing. Returns (t, area, nodes) samples.
#[pyfunction]
#[pyo3(signature = (anisotropy, r, t_end, cx = 0.0, beta = 0.0, forcing = 0.0, nodes = 512, dt = 1e-4, sample_dt = 0.01))]
#[allow(clippy::too_many_arguments)]
fn front_half_circle(
    py: Python<'_>,
    anisotropy: &PyAnisotropy,
    r: f64,
    t_end: f64,
    cx: f64,
    beta: f64,
    forcing: f64,
    nodes: usize,
    dt: f64,
    sample_dt: f64,
) -> PyResult<Vec<(f64, f64, Vec<[f64; 2]>)>> {
    let run = py
        .detach(|| {
            let curve = SmoothCurve::half_circle(cx, r, nodes)?;
            let opts = FrontOptions { dt_max: dt, sample_dt };
            run_front(&curve, &anisotropy.0, |_| beta, &ForcingField::Constant(forcing), t_end, &opts)
        })
        .map_err(err)?;
    Ok(run.samples.iter().map(|c| (c.time(), c.area(), c.nodes().to_vec())).collect())
}

#[pymodule]
#[pyo3(name = "capflow")]
fn capflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CapflowError", m.py().get_type::<CapflowError>())?;
    m.add_class::<PyAnisotropy>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PySet>()?;
    m.add_class::<PyScheme>()?;
    m.add_class::<PyFlow>()?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(flat_flow, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(front_half_circle, m)?)?;
    Ok(())
}
