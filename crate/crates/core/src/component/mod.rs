//! Atomic components `{. p .} o [: r :]`, the composition operators and
//! normalization of composition expressions.

mod compose;
mod equiv;
mod expr;

pub use compose::{feedback, parallel, serial};
pub(crate) use equiv::{align, derivation, refute};
pub use equiv::{semantically_equal, Equivalence};
pub use expr::{normalize, normalize_detailed, CompExpr, Normalized};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::symbolic::{decide_linear, Cmp, Formula, Mode, Sort, SymbolicError, Term, TriBool};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Port {
    pub name: String,
    pub sort: Sort,
}

impl Port {
    pub fn new(name: impl Into<String>, sort: Sort) -> Port {
        Port { name: name.into(), sort }
    }

    pub fn real(name: impl Into<String>) -> Port {
        Port::new(name, Sort::Real)
    }

    pub fn var(&self) -> Term {
        Term::Var(self.name.clone(), self.sort)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ComponentError {
    #[error("variable {var} of {component} is not a port in scope")]
    FreeVariableEscape { component: String, var: String },
    #[error("port {port} of {component} has sort {expected} but is used as {found}")]
    SortMismatch { component: String, port: String, expected: Sort, found: Sort },
    #[error("duplicate port name {port} in {component}")]
    DuplicatePort { component: String, port: String },
    #[error("serial composition needs {left} outputs to match {right} inputs")]
    ArityMismatch { left: usize, right: usize },
    #[error("serial composition connects {left} output to {right} input")]
    PortSortMismatch { left: Sort, right: Sort },
    #[error("feedback on {component} needs at least one input and one output of the same sort")]
    FeedbackShape { component: String },
    #[error("algebraic loop: output {output} depends on input {input}")]
    AlgebraicLoop { output: String, input: String },
    #[error("feedback on {component}: first output has no functional definition")]
    NonFunctionalFeedback { component: String },
    #[error("signatures differ: {0}")]
    SignatureMismatch(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicComponent {
    name: String,
    inputs: Vec<Port>,
    outputs: Vec<Port>,
    pre: Formula,
    rel: Formula,
    fundefs: Option<Vec<Term>>,
}

fn check_ports(name: &str, inputs: &[Port], outputs: &[Port]) -> Result<(), ComponentError> {
    let mut seen = BTreeSet::new();
    for p in inputs.iter().chain(outputs) {
        if !seen.insert(p.name.as_str()) {
            return Err(ComponentError::DuplicatePort { component: name.to_string(), port: p.name.clone() });
        }
    }
    Ok(())
}

fn check_scope(name: &str, f: &Formula, scope: &[&Port]) -> Result<(), ComponentError> {
    let sorts: BTreeMap<&str, Sort> = scope.iter().map(|p| (p.name.as_str(), p.sort)).collect();
    for (v, s) in f.free_var_sorts() {
        match sorts.get(v.as_str()) {
            None => return Err(ComponentError::FreeVariableEscape { component: name.to_string(), var: v }),
            Some(expected) if *expected != s => {
                return Err(ComponentError::SortMismatch {
                    component: name.to_string(),
                    port: v,
                    expected: *expected,
                    found: s,
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Recognizes `rel` as a conjunction `out_i = t_i` covering each output once,
/// with output-free right-hand sides. Returns the terms in output order.
fn detect_fundefs(outputs: &[Port], rel: &Formula) -> Option<Vec<Term>> {
    let parts: Vec<&Formula> = match rel {
        Formula::True => Vec::new(),
        Formula::And(ps) => ps.iter().collect(),
        other => vec![other],
    };
    if parts.len() != outputs.len() {
        return None;
    }
    let names: BTreeSet<&str> = outputs.iter().map(|p| p.name.as_str()).collect();
    let mut found: BTreeMap<&str, Term> = BTreeMap::new();
    for p in parts {
        let Formula::Atom(Cmp::Eq, lhs, rhs) = p else { return None };
        let name = lhs.as_var().filter(|n| names.contains(n))?;
        if rhs.free_vars().iter().any(|v| names.contains(v.as_str())) || found.contains_key(name) {
            return None;
        }
        found.insert(name, rhs.clone());
    }
    outputs.iter().map(|p| found.remove(p.name.as_str())).collect()
}

fn fundef_rel(outputs: &[Port], terms: &[Term]) -> Formula {
    Formula::conj(outputs.iter().zip(terms).map(|(p, t)| Formula::eq(p.var(), t.clone())).collect())
}

impl AtomicComponent {
    /// `{. pre .} o [: inputs ~> outputs . rel :]`. Functional form is detected
    /// when `rel` is a conjunction of output definitions.
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<Port>,
        outputs: Vec<Port>,
        pre: Formula,
        rel: Formula,
    ) -> Result<AtomicComponent, ComponentError> {
        let name = name.into();
        check_ports(&name, &inputs, &outputs)?;
        check_scope(&name, &pre, &inputs.iter().collect::<Vec<_>>())?;
        check_scope(&name, &rel, &inputs.iter().chain(&outputs).collect::<Vec<_>>())?;
        let fundefs = detect_fundefs(&outputs, &rel);
        let rel = match &fundefs {
            Some(ts) => fundef_rel(&outputs, ts),
            None => rel,
        };
        Ok(AtomicComponent { name, inputs, outputs, pre, rel, fundefs })
    }

    /// `{. pre .} o [- inputs ~> terms -]`.
    pub fn functional(
        name: impl Into<String>,
        inputs: Vec<Port>,
        outputs: Vec<Port>,
        pre: Formula,
        terms: Vec<Term>,
    ) -> Result<AtomicComponent, ComponentError> {
        let name = name.into();
        if terms.len() != outputs.len() {
            return Err(ComponentError::ArityMismatch { left: terms.len(), right: outputs.len() });
        }
        check_ports(&name, &inputs, &outputs)?;
        check_scope(&name, &pre, &inputs.iter().collect::<Vec<_>>())?;
        let rel = fundef_rel(&outputs, &terms);
        check_scope(&name, &rel, &inputs.iter().chain(&outputs).collect::<Vec<_>>())?;
        for t in &terms {
            check_scope(&name, &Formula::eq(t.clone(), t.clone()), &inputs.iter().collect::<Vec<_>>())?;
        }
        Ok(AtomicComponent { name, inputs, outputs, pre, rel, fundefs: Some(terms) })
    }

    pub fn bottom(name: impl Into<String>, inputs: Vec<Port>, outputs: Vec<Port>) -> AtomicComponent {
        AtomicComponent { name: name.into(), inputs, outputs, pre: Formula::False, rel: Formula::False, fundefs: None }
    }

    /// Builds a component without re-checking scope; used by composition,
    /// whose results satisfy the invariants by construction.
    pub(crate) fn assemble(
        name: String,
        inputs: Vec<Port>,
        outputs: Vec<Port>,
        pre: Formula,
        rel: Formula,
        fundefs: Option<Vec<Term>>,
    ) -> AtomicComponent {
        if pre == Formula::False {
            return AtomicComponent::bottom(name, inputs, outputs);
        }
        let fundefs = fundefs.map(|ts| ts.iter().map(Term::fold).collect()).or_else(|| detect_fundefs(&outputs, &rel));
        let rel = match &fundefs {
            Some(ts) => fundef_rel(&outputs, ts),
            None => rel,
        };
        debug_assert!(check_scope(&name, &pre, &inputs.iter().collect::<Vec<_>>()).is_ok(), "pre escapes: {pre}");
        debug_assert!(
            check_scope(&name, &rel, &inputs.iter().chain(&outputs).collect::<Vec<_>>()).is_ok(),
            "rel escapes: {rel}"
        );
        AtomicComponent { name, inputs, outputs, pre, rel, fundefs }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[Port] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Port] {
        &self.outputs
    }

    pub fn pre(&self) -> &Formula {
        &self.pre
    }

    pub fn rel(&self) -> &Formula {
        &self.rel
    }

    pub fn fundefs(&self) -> Option<&[Term]> {
        self.fundefs.as_deref()
    }

    pub fn is_functional(&self) -> bool {
        self.fundefs.is_some()
    }

    /// Syntactic bottom: precondition `False`.
    pub fn is_bottom(&self) -> bool {
        self.pre == Formula::False
    }

    /// Bottom detection by deciding satisfiability of the precondition.
    pub fn bottom_status(&self) -> TriBool {
        if self.is_bottom() {
            return TriBool::Yes;
        }
        match decide_linear(&self.pre, Mode::Satisfiability) {
            TriBool::No => TriBool::Yes,
            TriBool::Yes => TriBool::No,
            TriBool::Unknown => TriBool::Unknown,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> AtomicComponent {
        self.name = name.into();
        self
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs.iter().map(|p| p.name.clone()).collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.outputs.iter().map(|p| p.name.clone()).collect()
    }

    pub fn port_names(&self) -> BTreeSet<String> {
        self.inputs.iter().chain(&self.outputs).map(|p| p.name.clone()).collect()
    }

    /// Renames ports simultaneously; names not in `map` are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Result<AtomicComponent, ComponentError> {
        let port = |p: &Port| Port::new(map.get(&p.name).cloned().unwrap_or_else(|| p.name.clone()), p.sort);
        let inputs: Vec<Port> = self.inputs.iter().map(port).collect();
        let outputs: Vec<Port> = self.outputs.iter().map(port).collect();
        check_ports(&self.name, &inputs, &outputs)?;
        let binding: BTreeMap<String, Term> = self
            .inputs
            .iter()
            .chain(&self.outputs)
            .filter_map(|p| map.get(&p.name).map(|n| (p.name.clone(), Term::Var(n.clone(), p.sort))))
            .collect();
        let pre = self.pre.substitute(&binding)?;
        let rel = self.rel.substitute(&binding)?;
        let fundefs = self.fundefs.as_ref().map(|ts| ts.iter().map(|t| t.substitute(&binding)).collect());
        Ok(AtomicComponent { name: self.name.clone(), inputs, outputs, pre, rel, fundefs })
    }

    /// Renames ports positionally to the given names.
    pub fn with_port_names(&self, inputs: &[String], outputs: &[String]) -> Result<AtomicComponent, ComponentError> {
        if inputs.len() != self.inputs.len() || outputs.len() != self.outputs.len() {
            return Err(ComponentError::SignatureMismatch(format!(
                "expected {} inputs and {} outputs",
                self.inputs.len(),
                self.outputs.len()
            )));
        }
        let mut map = BTreeMap::new();
        for (p, n) in self.inputs.iter().zip(inputs).chain(self.outputs.iter().zip(outputs)) {
            map.insert(p.name.clone(), n.clone());
        }
        self.rename(&map)
    }

    /// Total formula length in characters of the canonical rendering of
    /// precondition and relation.
    pub fn formula_chars(&self) -> usize {
        self.pre.to_string().chars().count() + self.rel.to_string().chars().count()
    }
}

fn name_list(names: impl Iterator<Item = String>) -> String {
    let items: Vec<String> = names.collect();
    match items.len() {
        1 => items.into_iter().next().unwrap(),
        _ => format!("({})", items.join(", ")),
    }
}

impl fmt::Display for AtomicComponent {
    /// Canonical rendering: `[- ins ~> terms -]` for functional components,
    /// `[: ins ~> outs . rel :]` otherwise, prefixed by `{. pre .} o ` unless
    /// the precondition is `True`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            return f.write_str("⊥");
        }
        if self.pre != Formula::True {
            write!(f, "{{. {} .}} o ", self.pre)?;
        }
        let ins = name_list(self.inputs.iter().map(|p| p.name.clone()));
        match &self.fundefs {
            Some(ts) => {
                let terms = name_list(ts.iter().map(|t| t.to_string()));
                write!(f, "[- {ins} ~> {terms} -]")
            }
            None => {
                let outs = name_list(self.outputs.iter().map(|p| p.name.clone()));
                write!(f, "[: {ins} ~> {outs} . {} :]", self.rel)
            }
        }
    }
}
