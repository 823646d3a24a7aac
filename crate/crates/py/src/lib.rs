//! Python bindings: components, block diagrams, checks and simulation.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::rcrskit::analyzer::{self, CheckOptions, Format, ReportOptions, Verdict};
use ::rcrskit::blocks::{instantiate, BlockSpec, ParamValue};
use ::rcrskit::component::{self, AtomicComponent, CompExpr};
use ::rcrskit::diagram::{self, LoadOptions};
use ::rcrskit::simulator::{self, SimStatus, Trace, DEFAULT_TOLERANCE};
use ::rcrskit::symbolic::{format_rational, parse_rational, rational_to_f64, Env, Rational, Value};
use ::rcrskit::translator::{self, state_input, Strategy};

create_exception!(rcrskit, RcrsError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    RcrsError::new_err(e.to_string())
}

/// An atomic component `{. pre .} o [: rel :]`.
#[pyclass(name = "Component", module = "rcrskit", frozen)]
#[derive(Clone)]
struct PyComponent {
    inner: AtomicComponent,
}

#[pymethods]
impl PyComponent {
    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn inputs(&self) -> Vec<String> {
        self.inner.input_names()
    }

    #[getter]
    fn outputs(&self) -> Vec<String> {
        self.inner.output_names()
    }

    #[getter]
    fn pre(&self) -> String {
        self.inner.pre().to_string()
    }

    #[getter]
    fn rel(&self) -> String {
        self.inner.rel().to_string()
    }

    #[getter]
    fn is_functional(&self) -> bool {
        self.inner.is_functional()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("<Component {}>", self.inner)
    }

    fn __eq__(&self, other: &PyComponent) -> bool {
        self.inner == other.inner
    }
}

/// A loaded, validated block diagram.
#[pyclass(name = "Diagram", module = "rcrskit", frozen)]
struct PyDiagram {
    inner: diagram::Diagram,
}

fn strategy(name: &str) -> PyResult<Strategy> {
    Strategy::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| err(format!("unknown strategy {name:?}")))
}

#[pymethods]
impl PyDiagram {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn inputs(&self) -> Vec<String> {
        self.inner.inputs.iter().map(|p| p.name.clone()).collect()
    }

    #[getter]
    fn outputs(&self) -> Vec<String> {
        self.inner.outputs.iter().map(|p| p.name.clone()).collect()
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.inner.block_count()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    /// Initial state values keyed by `si_j`.
    #[getter]
    fn initial_state(&self) -> BTreeMap<String, f64> {
        initial_state(&self.inner)
    }

    fn render(&self) -> String {
        diagram::render(&self.inner)
    }

    fn flatten(&self) -> PyDiagram {
        PyDiagram { inner: diagram::flatten(&self.inner) }
    }

    /// Translates with `"ic"` or `"fp"` and normalizes.
    #[pyo3(signature = (strategy = "ic"))]
    fn normal_form(&self, strategy: &str) -> PyResult<PyComponent> {
        let t = translator::translate(&self.inner, self::strategy(strategy)?).map_err(err)?;
        Ok(PyComponent { inner: t.normalize().map_err(err)?.component })
    }

    /// Compatibility verdict of the translated diagram.
    #[pyo3(signature = (strategy = "ic"))]
    fn check(&self, strategy: &str) -> PyResult<PyVerdict> {
        let t = translator::translate(&self.inner, self::strategy(strategy)?).map_err(err)?;
        Ok(PyVerdict { inner: analyzer::check_translation(&t, self.inner.block_count()).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("<Diagram {} ({} blocks)>", self.inner.name, self.inner.block_count())
    }
}

fn initial_state(d: &diagram::Diagram) -> BTreeMap<String, f64> {
    d.initial_state().iter().enumerate().map(|(j, r)| (state_input(j + 1), rational_to_f64(r))).collect()
}

/// Outcome of a compatibility, refinement or equivalence check.
#[pyclass(name = "Verdict", module = "rcrskit", frozen)]
struct PyVerdict {
    inner: Verdict,
}

fn value_object(py: Python<'_>, v: &Value) -> PyResult<PyObject> {
    Ok(match v {
        Value::Real(r) => py.import("fractions")?.getattr("Fraction")?.call1((format_rational(r),))?.unbind(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Unit => py.None(),
    })
}

fn env_dict<'py>(py: Python<'py>, env: &Env) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in env {
        d.set_item(k, value_object(py, v)?)?;
    }
    Ok(d)
}

#[pymethods]
impl PyVerdict {
    /// `"Compatible"`, `"RefinementFails"`, `"Unknown"` and so on.
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn normal_form(&self) -> PyComponent {
        PyComponent { inner: self.inner.normal_form.clone() }
    }

    #[getter]
    fn pre(&self) -> String {
        self.inner.pre.to_string()
    }

    /// Counterexample with exact values as `Fraction`, or `None`.
    #[getter]
    fn witness<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        self.inner.witness.as_ref().map(|w| env_dict(py, w)).transpose()
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.inner.notes.clone()
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.stats.states
    }

    #[getter]
    fn feedbacks(&self) -> usize {
        self.inner.stats.feedbacks
    }

    #[getter]
    fn formula_chars(&self) -> usize {
        self.inner.stats.formula_chars
    }

    /// Report as `"text"` or `"json"`.
    #[pyo3(signature = (format = "text", timing = false))]
    fn report(&self, format: &str, timing: bool) -> PyResult<String> {
        let format = match format {
            "text" => Format::Text,
            "json" => Format::Json,
            other => return Err(err(format!("unknown format {other:?}"))),
        };
        Ok(analyzer::report(&self.inner, format, &ReportOptions { timing }))
    }

    fn __repr__(&self) -> String {
        format!("<Verdict {}>", self.inner.kind.name())
    }
}

fn param_value(v: &Bound<'_, PyAny>) -> PyResult<ParamValue> {
    if let Ok(n) = v.extract::<i64>() {
        return Ok(ParamValue::Number(Rational::from_integer(n.into())));
    }
    if let Ok(s) = v.extract::<String>() {
        return Ok(parse_rational(&s).map(ParamValue::Number).unwrap_or(ParamValue::Text(s)));
    }
    // Floats go through their shortest decimal form so 0.1 stays 1/10.
    let x: f64 = v.extract()?;
    parse_rational(&x.to_string()).map(ParamValue::Number).ok_or_else(|| err(format!("parameter {x} is not finite")))
}

/// Instantiates a library block, e.g. `block("Gain", k=2)`.
#[pyfunction]
#[pyo3(signature = (type_name, **params))]
fn block(type_name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<PyComponent> {
    let mut spec = BlockSpec::new(type_name);
    for (k, v) in params.into_iter().flatten() {
        spec = spec.with(&k.extract::<String>()?, param_value(&v)?);
    }
    Ok(PyComponent { inner: instantiate(&spec).map_err(err)? })
}

#[pyfunction]
fn serial(a: &PyComponent, b: &PyComponent) -> PyResult<PyComponent> {
    Ok(PyComponent { inner: component::serial(&a.inner, &b.inner).map_err(err)? })
}

#[pyfunction]
fn parallel(a: &PyComponent, b: &PyComponent) -> PyResult<PyComponent> {
    Ok(PyComponent { inner: component::parallel(&a.inner, &b.inner).map_err(err)? })
}

#[pyfunction]
fn feedback(c: &PyComponent) -> PyResult<PyComponent> {
    Ok(PyComponent { inner: component::feedback(&c.inner).map_err(err)? })
}

#[pyfunction]
fn load(path: &str) -> PyResult<PyDiagram> {
    Ok(PyDiagram { inner: diagram::load(path, &LoadOptions::default()).map_err(err)? })
}

#[pyfunction]
fn loads(text: &str) -> PyResult<PyDiagram> {
    Ok(PyDiagram { inner: diagram::load_str(text).map_err(err)? })
}

/// Serial composition of the given components, normalized and checked.
#[pyfunction]
#[pyo3(signature = (*components))]
fn check_compatibility(components: Vec<PyComponent>) -> PyResult<PyVerdict> {
    let mut it = components.into_iter().map(|c| CompExpr::atomic(c.inner));
    let first = it.next().ok_or_else(|| err("at least one component is needed"))?;
    let e = it.fold(first, CompExpr::serial);
    Ok(PyVerdict { inner: analyzer::check_compatibility(&e).map_err(err)? })
}

fn options(samples: Option<usize>, seed: Option<u64>) -> CheckOptions {
    let d = CheckOptions::default();
    CheckOptions { samples: samples.unwrap_or(d.samples), seed: seed.unwrap_or(d.seed) }
}

/// Whether `abstract_ <= concrete`.
#[pyfunction]
#[pyo3(signature = (abstract_, concrete, samples = None, seed = None))]
fn check_refinement(
    abstract_: &PyComponent,
    concrete: &PyComponent,
    samples: Option<usize>,
    seed: Option<u64>,
) -> PyResult<PyVerdict> {
    let v = analyzer::check_refinement(&abstract_.inner, &concrete.inner, &options(samples, seed)).map_err(err)?;
    Ok(PyVerdict { inner: v })
}

#[pyfunction]
#[pyo3(signature = (a, b, samples = None, seed = None))]
fn check_equivalence(
    a: &PyComponent,
    b: &PyComponent,
    samples: Option<usize>,
    seed: Option<u64>,
) -> PyResult<PyVerdict> {
    Ok(PyVerdict { inner: analyzer::check_equivalence(&a.inner, &b.inner, &options(samples, seed)).map_err(err)? })
}

/// Runs a functional component over input columns. Returns a dict with
/// `steps`, `status`, `violated_at`, `outputs` and `states`.
#[pyfunction]
#[pyo3(signature = (component, inputs, init = None, steps = None, tol = DEFAULT_TOLERANCE))]
fn simulate<'py>(
    py: Python<'py>,
    component: &PyComponent,
    inputs: BTreeMap<String, Vec<f64>>,
    init: Option<BTreeMap<String, f64>>,
    steps: Option<usize>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let trace = Trace { columns: inputs };
    let r = simulator::simulate(&component.inner, &trace, &init.unwrap_or_default(), steps, tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("steps", r.steps)?;
    match &r.status {
        SimStatus::Completed => {
            out.set_item("status", "completed")?;
            out.set_item("violated_at", py.None())?;
        }
        SimStatus::PreViolated { step, .. } => {
            out.set_item("status", "pre_violated")?;
            out.set_item("violated_at", *step)?;
        }
    }
    out.set_item("outputs", r.outputs.iter().cloned().collect::<BTreeMap<_, _>>())?;
    out.set_item("states", r.states.iter().cloned().collect::<BTreeMap<_, _>>())?;
    Ok(out)
}

#[pymodule]
fn rcrskit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RcrsError", m.py().get_type::<RcrsError>())?;
    m.add_class::<PyComponent>()?;
    m.add_class::<PyDiagram>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(block, m)?)?;
    m.add_function(wrap_pyfunction!(serial, m)?)?;
    m.add_function(wrap_pyfunction!(parallel, m)?)?;
    m.add_function(wrap_pyfunction!(feedback, m)?)?;
    m.add_function(wrap_pyfunction!(load, m)?)?;
    m.add_function(wrap_pyfunction!(loads, m)?)?;
    m.add_function(wrap_pyfunction!(check_compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(check_refinement, m)?)?;
    m.add_function(wrap_pyfunction!(check_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
