//! Python bindings. The module is importable as `tukey`.
//!
//! Matrices cross the boundary as lists of rows (`list[list[float]]`).

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tukey_core::bench;
use tukey_core::hardgen::{self, CnfFormula};
use tukey_core::io::{read_instance_path, write_instance_path, CsvLayout};
use tukey_core::lewis::{self, LewisOptions};
use tukey_core::linalg::leverage_scores as core_leverage;
use tukey_core::msketch::{SketchSpec, SketchedProblem};
use tukey_core::rowsample::{sample_reduce as core_sample_reduce, SampleConfig};
use tukey_core::solver::{self, SolveOptions, SolveReport};
use tukey_core::{Error, LossKind, LossSpec, Mat, RegressionInstance};

create_exception!(tukey, ConvergenceError, PyRuntimeError, "IRLS, Lewis iteration or row sampling made no progress.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Convergence { .. } | Error::Stagnation { .. } | Error::FlatStart(_) => {
            ConvergenceError::new_err(e.to_string())
        }
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn mat(rows: &[Vec<f64>]) -> PyResult<Mat> {
    Mat::from_rows(rows).map_err(to_py)
}

/// A validated loss: `tukey` (bisquare) or `clipped` (`min(|a|^p, tau^p)`).
#[pyclass(name = "Loss", module = "tukey", frozen, from_py_object)]
#[derive(Clone)]
struct PyLoss {
    inner: LossSpec,
}

#[pymethods]
impl PyLoss {
    #[new]
    #[pyo3(signature = (kind = "tukey", tau = 10.0, p = None, scale = 1.0))]
    fn new(kind: &str, tau: f64, p: Option<f64>, scale: f64) -> PyResult<Self> {
        let kind: LossKind = kind.parse().map_err(to_py)?;
        let p = p.unwrap_or(2.0);
        if kind == LossKind::TukeyBisquare && p != 2.0 {
            return Err(PyValueError::new_err("the bisquare has p = 2"));
        }
        Ok(Self {
            inner: LossSpec::new(kind, tau, p, scale).map_err(to_py)?,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            LossKind::TukeyBisquare => "tukey",
            LossKind::ClippedPower => "clipped",
        }
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    /// Loss value on the flat region.
    #[getter]
    fn flat_value(&self) -> f64 {
        self.inner.flat_value()
    }

    /// `U / L` of the growth sandwich.
    #[getter]
    fn growth_ratio(&self) -> f64 {
        self.inner.growth_bounds().ratio()
    }

    fn value(&self, a: f64) -> PyResult<f64> {
        self.inner.eval(a).map_err(to_py)
    }

    fn irls_weight(&self, r: f64) -> PyResult<f64> {
        self.inner.irls_weight(r).map_err(to_py)
    }

    #[pyo3(signature = (y, weights = None))]
    fn m_norm(&self, y: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
        self.inner.m_norm(&y, weights.as_deref()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Loss(kind={:?}, tau={}, p={}, scale={})",
            self.kind(),
            self.inner.tau(),
            self.inner.p(),
            self.inner.scale()
        )
    }
}

/// `min_x sum_i w_i M((Ax - b)_i)` with optional row weights.
#[pyclass(name = "Instance", module = "tukey", from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: RegressionInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (a, b, weights = None))]
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let inst = RegressionInstance::new(mat(&a)?, b).map_err(to_py)?;
        let inst = match weights {
            Some(w) => inst.with_weights(w).map_err(to_py)?,
            None => inst,
        };
        Ok(Self { inner: inst })
    }

    #[staticmethod]
    #[pyo3(signature = (path, header = true, weighted = false))]
    fn read_csv(path: std::path::PathBuf, header: bool, weighted: bool) -> PyResult<Self> {
        let inner = read_instance_path(&path, CsvLayout { header, weighted }).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[pyo3(signature = (path, header = true))]
    fn write_csv(&self, path: std::path::PathBuf, header: bool) -> PyResult<()> {
        write_instance_path(&path, &self.inner, header).map_err(to_py)
    }

    #[getter]
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    #[getter]
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        self.inner.a.to_dense_rows()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b.clone()
    }

    #[getter]
    fn weights(&self) -> Option<Vec<f64>> {
        self.inner.weights.clone()
    }

    fn objective(&self, loss: &PyLoss, x: Vec<f64>) -> PyResult<f64> {
        self.inner.objective(&loss.inner, &x).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.nrows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(nrows={}, ncols={}, weighted={})",
            self.inner.nrows(),
            self.inner.ncols(),
            self.inner.weights.is_some()
        )
    }
}

#[pyclass(name = "Solution", module = "tukey", frozen, get_all)]
struct PySolution {
    x: Vec<f64>,
    objective: f64,
    iterations: usize,
    restarts: usize,
    best_restart: usize,
    converged: bool,
    trace: Vec<f64>,
}

impl From<SolveReport> for PySolution {
    fn from(r: SolveReport) -> Self {
        Self {
            x: r.x,
            objective: r.objective,
            iterations: r.iterations,
            restarts: r.restarts_used,
            best_restart: r.best_restart,
            converged: r.converged,
            trace: r.trace,
        }
    }
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!("Solution(objective={}, x={:?})", self.objective, self.x)
    }
}

fn solve_options(restarts: usize, max_iter: usize, seed: u64) -> SolveOptions {
    SolveOptions {
        restarts,
        max_iter,
        seed,
        ..SolveOptions::default()
    }
}

#[pyfunction]
#[pyo3(signature = (n, d, seed = 0))]
fn gen_gaussian(n: usize, d: usize, seed: u64) -> PyResult<PyInstance> {
    Ok(PyInstance {
        inner: bench::gen_gaussian(n, d, seed).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (instance, fraction, magnitude = 1e4, seed = 0))]
fn inject_outliers(instance: &PyInstance, fraction: f64, magnitude: f64, seed: u64) -> PyResult<PyInstance> {
    Ok(PyInstance {
        inner: bench::inject_outliers(&instance.inner, fraction, magnitude, seed).map_err(to_py)?,
    })
}

#[pyfunction]
fn leverage_scores(a: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    core_leverage(&mat(&a)?).map_err(to_py)
}

/// Returns `(u, iterations, residual)`.
#[pyfunction]
#[pyo3(signature = (a, p, tol = 1e-10, max_iter = 100))]
fn lewis_weights(a: Vec<Vec<f64>>, p: f64, tol: f64, max_iter: usize) -> PyResult<(Vec<f64>, usize, f64)> {
    let w = lewis::lewis_weights(&mat(&a)?, p, LewisOptions { tol, max_iter }).map_err(to_py)?;
    Ok((w.u, w.iterations, w.residual))
}

/// Recursive row sampling down to at most `rows` rows. Returns the weighted
/// reduced instance and the number of steps taken.
#[pyfunction]
#[pyo3(signature = (instance, rows, loss, eps = 0.5, seed = 0))]
fn sample_reduce(instance: &PyInstance, rows: usize, loss: &PyLoss, eps: f64, seed: u64) -> PyResult<(PyInstance, usize)> {
    let inst = &instance.inner;
    let mut cfg = SampleConfig::new(&loss.inner, rows);
    cfg.eps = eps;
    cfg.seed = seed;
    let report = core_sample_reduce(&inst.a, &inst.b, &cfg).map_err(to_py)?;
    let reduced = report.weights.reduce(&inst.a, &inst.b).map_err(to_py)?;
    Ok((PyInstance { inner: reduced }, report.depth()))
}

fn sketch_spec(n: usize, rows_cap: Option<usize>, m: Option<usize>, b: Option<usize>, c: Option<usize>) -> SketchSpec {
    let mut spec = SketchSpec::for_dim(n);
    spec.rows_cap = rows_cap;
    spec.m = m.unwrap_or(spec.m);
    spec.b = b.unwrap_or(spec.b);
    spec.c = c.unwrap_or(spec.c);
    spec
}

/// `(SA, Sb)` with the level weights as row weights.
#[pyfunction]
#[pyo3(signature = (instance, rows_cap = None, seed = 0, m = None, b = None, c = None))]
fn sketch(
    instance: &PyInstance,
    rows_cap: Option<usize>,
    seed: u64,
    m: Option<usize>,
    b: Option<usize>,
    c: Option<usize>,
) -> PyResult<PyInstance> {
    let inst = &instance.inner;
    let spec = sketch_spec(inst.nrows(), rows_cap, m, b, c);
    let prob = SketchedProblem::new(&inst.a, &inst.b, &spec, seed).map_err(to_py)?;
    Ok(PyInstance {
        inner: prob.instance().map_err(to_py)?,
    })
}

/// Sketches and solves on the plain or clipped estimator.
#[pyfunction]
#[pyo3(signature = (instance, loss, rows_cap = None, clipped = true, seed = 0, restarts = 10))]
fn sketch_solve(
    instance: &PyInstance,
    loss: &PyLoss,
    rows_cap: Option<usize>,
    clipped: bool,
    seed: u64,
    restarts: usize,
) -> PyResult<PySolution> {
    let inst = &instance.inner;
    let spec = sketch_spec(inst.nrows(), rows_cap, None, None, None);
    let prob = SketchedProblem::new(&inst.a, &inst.b, &spec, seed).map_err(to_py)?;
    let r = prob
        .solve(&loss.inner, clipped, &solve_options(restarts, 200, seed))
        .map_err(to_py)?;
    Ok(r.into())
}

#[pyfunction]
#[pyo3(signature = (instance, loss, restarts = 10, max_iter = 200, seed = 0))]
fn solve(instance: &PyInstance, loss: &PyLoss, restarts: usize, max_iter: usize, seed: u64) -> PyResult<PySolution> {
    let r = solver::solve_instance(&instance.inner, &loss.inner, &solve_options(restarts, max_iter, seed))
        .map_err(to_py)?;
    Ok(r.into())
}

/// Grid-and-zoom global search for `d <= 2`.
#[pyfunction]
fn brute_force(instance: &PyInstance, loss: &PyLoss) -> PyResult<PySolution> {
    let inst = &instance.inner;
    let grid = solver::GridSpec::for_dim(inst.ncols());
    let r = solver::brute_force_solve(&inst.a, &inst.b, inst.weights.as_deref(), &loss.inner, &grid)
        .map_err(to_py)?;
    Ok(r.into())
}

#[pyfunction]
fn approx_ratio(instance: &PyInstance, loss: &PyLoss, x_hat: Vec<f64>, x_ref: Vec<f64>) -> PyResult<f64> {
    let inst = &instance.inner;
    solver::approx_ratio(&inst.a, &inst.b, &loss.inner, &x_hat, &x_ref).map_err(to_py)
}

/// A random formula satisfied by a random assignment. Returns
/// `(dimacs_text, assignment)`.
#[pyfunction]
#[pyo3(signature = (num_vars, num_clauses, seed = 0))]
fn planted_formula(num_vars: usize, num_clauses: usize, seed: u64) -> PyResult<(String, Vec<bool>)> {
    let (phi, truth) = hardgen::planted_formula(num_vars, num_clauses, seed).map_err(to_py)?;
    Ok((phi.to_dimacs(), truth))
}

/// Builds the regression instance for a DIMACS 3-CNF formula. Returns the
/// instance and a manifest dict.
#[pyfunction]
#[pyo3(signature = (dimacs, tau = 1.0, loss = None))]
fn reduce_sat<'py>(
    py: Python<'py>,
    dimacs: &str,
    tau: f64,
    loss: Option<PyLoss>,
) -> PyResult<(PyInstance, Bound<'py, PyDict>)> {
    let phi: CnfFormula = dimacs.parse().map_err(to_py)?;
    let loss = match loss {
        Some(l) => l.inner,
        None => LossSpec::clipped(tau, 2.0).map_err(to_py)?,
    };
    let hard = hardgen::reduce_to_regression(&phi, tau, &loss).map_err(to_py)?;
    let m = hard.manifest();
    let d = PyDict::new(py);
    d.set_item("variables", m.variables)?;
    d.set_item("clauses", m.clauses)?;
    d.set_item("rows", m.rows)?;
    d.set_item("tau", m.tau)?;
    d.set_item("flat_value", m.flat_value)?;
    d.set_item("satisfiable_cost", m.satisfiable_cost)?;
    Ok((PyInstance { inner: hard.instance }, d))
}

#[pyfunction]
fn assignment_to_point(assignment: Vec<bool>, tau: f64) -> Vec<f64> {
    hardgen::assignment_to_point(&assignment, tau)
}

#[pyfunction]
fn point_to_assignment(x: Vec<f64>, tau: f64) -> Vec<bool> {
    hardgen::point_to_assignment(&x, tau)
}

#[pymodule]
#[pyo3(name = "tukey")]
fn tukey_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLoss>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add_function(wrap_pyfunction!(gen_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(inject_outliers, m)?)?;
    m.add_function(wrap_pyfunction!(leverage_scores, m)?)?;
    m.add_function(wrap_pyfunction!(lewis_weights, m)?)?;
    m.add_function(wrap_pyfunction!(sample_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(sketch, m)?)?;
    m.add_function(wrap_pyfunction!(sketch_solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(approx_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(planted_formula, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_sat, m)?)?;
    m.add_function(wrap_pyfunction!(assignment_to_point, m)?)?;
    m.add_function(wrap_pyfunction!(point_to_assignment, m)?)?;
    Ok(())
}
