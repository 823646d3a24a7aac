//! Fixed-step execution of deterministic components with state feedback.
//!
//! A component runs if it has output terms, or if each disjunct of its
//! relation defines every output by an equation (as for saturation).
//!
//! Inputs named `si_j` are current states and outputs named `so_j` the
//! matching next states; every other port is external.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::component::AtomicComponent;
use crate::symbolic::eval::{eval_formula_f64, eval_term_f64};
use crate::symbolic::qe::{dnf, nnf};
use crate::symbolic::simplify::find_point;
use crate::symbolic::{Formula, SymbolicError, Term, DEFAULT_ATOM_LIMIT};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("component is not functional")]
    NotFunctional,
    #[error("no case of the relation applies at step {0}")]
    NoCase(usize),
    #[error("state ports do not pair up: {0}")]
    StateMismatch(String),
    #[error("trace has no column for input {0}")]
    MissingInput(String),
    #[error("trace needs {needed} rows, found {found}")]
    TraceLength { needed: usize, found: usize },
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace CSV: {0}")]
    Format(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Input samples per external input name, one value per step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl Trace {
    pub fn constant(names: &[&str], value: f64, steps: usize) -> Trace {
        Trace { columns: names.iter().map(|n| (n.to_string(), vec![value; steps])).collect() }
    }

    pub fn len(&self) -> usize {
        self.columns.values().map(Vec::len).min().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reads a CSV with a header row of input names.
    pub fn read_csv(r: impl Read) -> Result<Trace, SimError> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            for (i, field) in rec.iter().enumerate() {
                let x: f64 = field
                    .parse()
                    .map_err(|_| SimError::Format(format!("row {}: {field:?} is not a number", row + 1)))?;
                columns[i].push(x);
            }
        }
        Ok(Trace { columns: headers.into_iter().zip(columns).collect() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimStatus {
    Completed,
    /// The precondition failed at `step` under `env`.
    PreViolated {
        step: usize,
        env: BTreeMap<String, f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// External inputs as consumed, one value per completed step.
    pub inputs: Vec<(String, Vec<f64>)>,
    /// External outputs, one value per completed step.
    pub outputs: Vec<(String, Vec<f64>)>,
    /// State values keyed by `si_j`, including the initial value.
    pub states: Vec<(String, Vec<f64>)>,
    /// Number of completed steps.
    pub steps: usize,
    pub status: SimStatus,
}

impl SimResult {
    pub fn output(&self, name: &str) -> Option<&[f64]> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn state(&self, name: &str) -> Option<&[f64]> {
        self.states.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// CSV with columns: inputs, `si_j`, outputs, `so_j`; one row per step.
    pub fn write_csv(&self, w: impl Write) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = self.inputs.iter().map(|(n, _)| n.clone()).collect();
        header.extend(self.states.iter().map(|(n, _)| n.clone()));
        header.extend(self.outputs.iter().map(|(n, _)| n.clone()));
        header.extend(self.states.iter().map(|(n, _)| next_state_name(n)));
        wr.write_record(&header)?;
        for k in 0..self.steps {
            let mut row: Vec<String> = self.inputs.iter().map(|(_, v)| fmt(v[k])).collect();
            row.extend(self.states.iter().map(|(_, v)| fmt(v[k])));
            row.extend(self.outputs.iter().map(|(_, v)| fmt(v[k])));
            row.extend(self.states.iter().map(|(_, v)| fmt(v[k + 1])));
            wr.write_record(&row)?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn next_state_name(si: &str) -> String {
    format!("so_{}", si.trim_start_matches("si_"))
}

/// Positions of external inputs, state inputs paired with their next-state
/// output positions, and external outputs.
struct Layout {
    inputs: Vec<usize>,
    states: Vec<(usize, usize)>,
    outputs: Vec<usize>,
}

fn layout(c: &AtomicComponent) -> Result<Layout, SimError> {
    let ins = c.input_names();
    let outs = c.output_names();
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    for (i, n) in ins.iter().enumerate() {
        match n.strip_prefix("si_") {
            Some(j) => {
                let so = format!("so_{j}");
                let o = outs
                    .iter()
                    .position(|m| *m == so)
                    .ok_or_else(|| SimError::StateMismatch(format!("{n} has no {so}")))?;
                states.push((i, o));
            }
            None => inputs.push(i),
        }
    }
    let paired: Vec<usize> = states.iter().map(|(_, o)| *o).collect();
    let mut outputs = Vec::new();
    for (o, n) in outs.iter().enumerate() {
        if paired.contains(&o) {
            continue;
        }
        if n.starts_with("so_") {
            return Err(SimError::StateMismatch(format!("{n} has no current state")));
        }
        outputs.push(o);
    }
    Ok(Layout { inputs, states, outputs })
}

/// One case of a piecewise-functional relation: where `guard` holds, the
/// outputs are given by `defs` in output order.
struct Case {
    guard: Formula,
    defs: Vec<Term>,
}

/// Functional components give a single case. Otherwise every disjunct of
/// the relation must define all outputs by equations.
fn cases(c: &AtomicComponent) -> Result<Vec<Case>, SimError> {
    if let Some(ts) = c.fundefs() {
        return Ok(vec![Case { guard: Formula::True, defs: ts.to_vec() }]);
    }
    if !c.rel().is_quantifier_free() {
        return Err(SimError::NotFunctional);
    }
    let clauses = dnf(&nnf(c.rel(), true), DEFAULT_ATOM_LIMIT).map_err(|_| SimError::NotFunctional)?;
    let outputs = c.outputs();
    let mut out = Vec::new();
    for mut parts in clauses {
        let mut defs: BTreeMap<String, Term> = BTreeMap::new();
        let mut progress = true;
        while progress {
            progress = false;
            for p in outputs {
                if defs.contains_key(&p.name) {
                    continue;
                }
                let found = parts.iter().enumerate().find_map(|(i, part)| {
                    let (_, t) = find_point(&p.name, p.sort, std::slice::from_ref(part))?;
                    let t = t.substitute(&defs);
                    (!outputs.iter().any(|q| t.mentions(&q.name))).then_some((i, t))
                });
                let Some((i, t)) = found else { continue };
                parts.remove(i);
                defs.insert(p.name.clone(), t);
                progress = true;
            }
        }
        if defs.len() < outputs.len() {
            return Err(SimError::NotFunctional);
        }
        let guard = Formula::And(parts).substitute(&defs)?;
        out.push(Case { guard, defs: outputs.iter().map(|p| defs[&p.name].clone()).collect() });
    }
    Ok(out)
}

fn evaluate(cases: &[Case], env: &BTreeMap<String, f64>, tol: f64) -> Result<Option<Vec<f64>>, SimError> {
    for case in cases {
        if eval_formula_f64(&case.guard, env, tol)? {
            let values = case.defs.iter().map(|t| eval_term_f64(t, env)).collect::<Result<Vec<f64>, _>>()?;
            return Ok(Some(values));
        }
    }
    Ok(None)
}

/// Runs `steps` steps (all trace rows when `None`). `init` gives initial
/// state values by `si_j` name; missing ones start at zero.
pub fn simulate(
    c: &AtomicComponent,
    trace: &Trace,
    init: &BTreeMap<String, f64>,
    steps: Option<usize>,
    tol: f64,
) -> Result<SimResult, SimError> {
    let cases = cases(c)?;
    let lay = layout(c)?;
    let in_names = c.input_names();
    let out_names = c.output_names();
    let mut columns = Vec::new();
    for &i in &lay.inputs {
        let col = trace.columns.get(&in_names[i]).ok_or_else(|| SimError::MissingInput(in_names[i].clone()))?;
        columns.push(col);
    }
    let steps = steps.unwrap_or_else(|| if lay.inputs.is_empty() { 1 } else { trace.len() });
    if let Some(short) = columns.iter().map(|c| c.len()).min().filter(|&n| n < steps) {
        return Err(SimError::TraceLength { needed: steps, found: short });
    }

    let mut state: Vec<f64> = lay.states.iter().map(|(i, _)| init.get(&in_names[*i]).copied().unwrap_or(0.0)).collect();
    let mut result = SimResult {
        inputs: lay.inputs.iter().map(|&i| (in_names[i].clone(), Vec::new())).collect(),
        outputs: lay.outputs.iter().map(|&o| (out_names[o].clone(), Vec::new())).collect(),
        states: lay.states.iter().zip(&state).map(|((i, _), s)| (in_names[*i].clone(), vec![*s])).collect(),
        steps: 0,
        status: SimStatus::Completed,
    };
    for k in 0..steps {
        let mut env = BTreeMap::new();
        for (col, &i) in columns.iter().zip(&lay.inputs) {
            env.insert(in_names[i].clone(), col[k]);
        }
        for (s, (i, _)) in state.iter().zip(&lay.states) {
            env.insert(in_names[*i].clone(), *s);
        }
        if !eval_formula_f64(c.pre(), &env, tol)? {
            result.status = SimStatus::PreViolated { step: k, env };
            return Ok(result);
        }
        let values = evaluate(&cases, &env, tol)?.ok_or(SimError::NoCase(k))?;
        for (slot, &i) in result.inputs.iter_mut().zip(&lay.inputs) {
            slot.1.push(env[&in_names[i]]);
        }
        for (slot, &o) in result.outputs.iter_mut().zip(&lay.outputs) {
            slot.1.push(values[o]);
        }
        for ((slot, (_, o)), s) in result.states.iter_mut().zip(&lay.states).zip(state.iter_mut()) {
            *s = values[*o];
            slot.1.push(*s);
        }
        result.steps += 1;
    }
    Ok(result)
}

/// Checks that every completed step satisfies the relation of `c` within
/// `tol`.
pub fn validate_trace(c: &AtomicComponent, result: &SimResult, tol: f64) -> Result<bool, SimError> {
    cases(c)?;
    if result.status != SimStatus::Completed {
        return Ok(false);
    }
    let lay = layout(c)?;
    let in_names = c.input_names();
    let out_names = c.output_names();
    for k in 0..result.steps {
        let mut env = BTreeMap::new();
        for (n, v) in &result.inputs {
            env.insert(n.clone(), v[k]);
        }
        for (n, v) in &result.outputs {
            env.insert(n.clone(), v[k]);
        }
        for ((n, v), (i, o)) in result.states.iter().zip(&lay.states) {
            debug_assert_eq!(*n, in_names[*i]);
            env.insert(in_names[*i].clone(), v[k]);
            env.insert(out_names[*o].clone(), v[k + 1]);
        }
        if !eval_formula_f64(c.pre(), &env, tol)? || !eval_formula_f64(c.rel(), &env, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}
