//! Python bindings: terms, match counting, model compilation and simulation.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cwc_core::compiler::{self, CompiledModel};
use cwc_core::gillespie;
use cwc_core::surface::{self, GridDims, Severity, SurfaceModel};
use cwc_core::term;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A ground CWC term, parsed from the canonical text syntax.
#[pyclass(module = "cwc", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct Term(term::Term);

#[pymethods]
impl Term {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        term::Term::parse(text).map(Term).map_err(value_error)
    }

    /// Occurrences of the simple term written in `item`.
    fn multiplicity(&self, item: &str) -> PyResult<usize> {
        let t = term::Term::parse(item).map_err(value_error)?;
        match t.iter().collect::<Vec<_>>().as_slice() {
            [(s, 1)] => Ok(self.0.multiplicity(s)),
            _ => Err(PyValueError::new_err("expected a single simple term")),
        }
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Term({:?})", self.0.to_string())
    }
}

#[derive(FromPyObject)]
enum TermArg {
    Term(Term),
    Text(String),
}

impl TermArg {
    fn into_term(self) -> PyResult<term::Term> {
        match self {
            TermArg::Term(t) => Ok(t.0),
            TermArg::Text(s) => term::Term::parse(&s).map_err(value_error),
        }
    }
}

/// Number of distinct matches of `pattern` in `term`.
#[pyfunction]
fn count_matches(pattern: &str, term: TermArg) -> PyResult<u64> {
    let p = surface::parse_pattern(pattern).map_err(value_error)?;
    cwc_core::matcher::count_matches(&p, &term.into_term()?).map_err(value_error)
}

/// Coordinates of a coordinate set expression on a `rows` x `cols` grid, row-major.
#[pyfunction]
fn eval_coords(expr: &str, rows: u32, cols: u32) -> PyResult<Vec<(u32, u32)>> {
    let e = surface::parse_coord_expr(expr).map_err(value_error)?;
    let set = compiler::eval_coords(&e, GridDims { rows, cols }).map_err(value_error)?;
    Ok(set.into_iter().map(|c| (c.row, c.col)).collect())
}

/// A parsed surface model.
#[pyclass(module = "cwc", frozen)]
struct Model(SurfaceModel);

#[pymethods]
impl Model {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        surface::parse_model(text).map(Model).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| runtime_error(format!("{}: {e}", path.display())))?;
        Self::new(&text)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    #[getter]
    fn dims(&self) -> (u32, u32) {
        (self.0.dims.rows, self.0.dims.cols)
    }

    /// `(line, column, severity, message)` for every validation finding.
    fn diagnostics(&self) -> Vec<(usize, usize, &'static str, String)> {
        compiler::validate(&self.0)
            .into_iter()
            .map(|d| {
                let severity = match d.severity {
                    Severity::Warning => "warning",
                    Severity::Error => "error",
                };
                (d.pos.line, d.pos.col, severity, d.message)
            })
            .collect()
    }

    fn compile(&self) -> PyResult<Compiled> {
        compiler::compile(&self.0).map(Compiled).map_err(value_error)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// A compiled model: ground rules, initial term and monitors.
#[pyclass(module = "cwc", frozen)]
struct Compiled(CompiledModel);

#[pymethods]
impl Compiled {
    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    #[getter]
    fn n_rules(&self) -> usize {
        self.0.rules.len()
    }

    #[getter]
    fn initial(&self) -> Term {
        Term(self.0.initial.clone())
    }

    #[getter]
    fn monitor_names(&self) -> Vec<String> {
        self.0.monitors.iter().map(|m| m.name.clone()).collect()
    }

    fn rules(&self) -> Vec<String> {
        self.0.rules.iter().map(ToString::to_string).collect()
    }

    fn ground_text(&self) -> String {
        compiler::emit_ground_model(&self.0)
    }

    /// One run. Returns a dict with `names`, `times` and `values`, where
    /// `values[i]` holds every monitor at `times[i]`.
    #[pyo3(signature = (horizon, interval=None, seed=0))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        horizon: f64,
        interval: Option<f64>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let dt = interval.unwrap_or(horizon / 100.0);
        let t = py.detach(|| gillespie::simulate_run(&self.0, horizon, dt, seed)).map_err(runtime_error)?;
        let out = PyDict::new(py);
        out.set_item("names", t.names)?;
        out.set_item("times", t.times)?;
        out.set_item("values", t.values)?;
        Ok(out)
    }

    /// An ensemble. Returns a dict with `names`, `times`, `means` and `stds`
    /// (indexed `[monitor][sample]`) and `runs`, the per-run values.
    #[pyo3(signature = (runs, horizon, interval=None, seed=0, threads=0))]
    fn run_ensemble<'py>(
        &self,
        py: Python<'py>,
        runs: usize,
        horizon: f64,
        interval: Option<f64>,
        seed: u64,
        threads: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let dt = interval.unwrap_or(horizon / 100.0);
        let (series, trajectories) =
            py.detach(|| gillespie::run_ensemble(&self.0, runs, horizon, dt, seed, threads)).map_err(runtime_error)?;
        let out = PyDict::new(py);
        out.set_item("names", series.names)?;
        out.set_item("times", series.times)?;
        out.set_item("means", series.means)?;
        out.set_item("stds", series.stds)?;
        out.set_item("runs", trajectories.into_iter().map(|t| t.values).collect::<Vec<_>>())?;
        Ok(out)
    }
}

#[pymodule]
fn cwc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Term>()?;
    m.add_class::<Model>()?;
    m.add_class::<Compiled>()?;
    m.add_function(wrap_pyfunction!(count_matches, m)?)?;
    m.add_function(wrap_pyfunction!(eval_coords, m)?)?;
    Ok(())
}
