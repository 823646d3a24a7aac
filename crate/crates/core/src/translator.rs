//! Compiles block diagrams into composition expressions.
//!
//! Two strategies are provided. `Fp` puts all units in parallel between two
//! routers and closes every internal wire with a feedback. `Ic` chains the
//! units in topological order and closes only the back edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::blocks::{diagram_component, BlockError};
use crate::component::{normalize_detailed, AtomicComponent, CompExpr, ComponentError, Normalized, Port};
use crate::diagram::{Diagram, Source, Target, Unit, ValidationError};
use crate::symbolic::{fresh_var, Sort};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Ic,
    Fp,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Ic, Strategy::Fp];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ic => "ic",
            Strategy::Fp => "fp",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s.to_ascii_lowercase().as_str() {
            "ic" => Ok(Strategy::Ic),
            "fp" => Ok(Strategy::Fp),
            _ => Err(format!("unknown strategy {s}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("block {id}: {source}")]
    Block { id: String, source: BlockError },
    #[error("router pattern names unknown variable {0}")]
    UnknownVariable(String),
    #[error("router pattern repeats {0}; duplication needs a Split")]
    DuplicationRequested(String),
    #[error(transparent)]
    Component(#[from] ComponentError),
}

/// A translated diagram together with its external signature: declared
/// inputs followed by `si_j`, declared outputs followed by `so_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translation {
    pub strategy: Strategy,
    pub expr: CompExpr,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub states: usize,
}

impl Translation {
    /// Normal form with ports named after the external signature.
    pub fn normalize(&self) -> Result<Normalized, ComponentError> {
        let mut n = normalize_detailed(&self.expr)?;
        let ins: Vec<String> = self.inputs.iter().map(|p| p.name.clone()).collect();
        let outs: Vec<String> = self.outputs.iter().map(|p| p.name.clone()).collect();
        n.component = n.component.with_port_names(&ins, &outs)?;
        Ok(n)
    }
}

pub fn state_input(j: usize) -> String {
    format!("si_{j}")
}

pub fn state_output(j: usize) -> String {
    format!("so_{j}")
}

/// `[- in_vars ~> out_pattern -]`: pure wiring. Output ports get fresh names.
pub fn make_router(in_vars: &[Port], out_pattern: &[String]) -> Result<AtomicComponent, TranslateError> {
    let sorts: BTreeMap<&str, Sort> = in_vars.iter().map(|p| (p.name.as_str(), p.sort)).collect();
    let mut seen = BTreeSet::new();
    let mut used: BTreeSet<String> = in_vars.iter().map(|p| p.name.clone()).collect();
    let mut outputs = Vec::new();
    let mut terms = Vec::new();
    for n in out_pattern {
        let sort = *sorts.get(n.as_str()).ok_or_else(|| TranslateError::UnknownVariable(n.clone()))?;
        if !seen.insert(n.as_str()) {
            return Err(TranslateError::DuplicationRequested(n.clone()));
        }
        let out = fresh_var(n, &used);
        used.insert(out.clone());
        outputs.push(Port::new(out, sort));
        terms.push(Port::new(n.clone(), sort).var());
    }
    Ok(AtomicComponent::functional("", in_vars.to_vec(), outputs, crate::symbolic::Formula::True, terms)?)
}

/// Variable names of every port of every unit.
struct Naming {
    /// Per unit: data input variables, state input variables.
    unit_inputs: Vec<Vec<Port>>,
    /// Per unit: data output variables, state output variables.
    unit_outputs: Vec<Vec<Port>>,
    /// Internal wires in declaration order, by variable name.
    internal: Vec<Port>,
    ext_inputs: Vec<Port>,
    ext_outputs: Vec<Port>,
    state_inputs: Vec<Port>,
    state_outputs: Vec<Port>,
}

fn naming(d: &Diagram) -> Naming {
    let units = d.units();
    let index: BTreeMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (u.id(), i)).collect();
    let sigs: Vec<_> = units.iter().map(Unit::signature).collect();
    let mut used: BTreeSet<String> = d.inputs.iter().chain(&d.outputs).map(|p| p.name.clone()).collect();

    let mut inputs: Vec<Vec<Option<Port>>> = sigs.iter().map(|s| vec![None; s.inputs.len()]).collect();
    let mut outputs: Vec<Vec<Option<Port>>> = sigs.iter().map(|s| vec![None; s.outputs.len()]).collect();
    let mut internal = Vec::new();
    let mut k = 0;
    for w in &d.wires {
        let var = match (&w.from, &w.to) {
            (Source::Port(..), Target::Port(..)) => {
                k += 1;
                let n = fresh_var(&format!("w_{k}"), &used);
                used.insert(n.clone());
                let p = Port::new(n, w.sort);
                internal.push(p.clone());
                p
            }
            (Source::Input(i), _) => d.inputs[*i].clone(),
            (_, Target::Output(o)) => d.outputs[*o].clone(),
        };
        if let Source::Port(id, port) = &w.from {
            outputs[index[id.as_str()]][*port] = Some(var.clone());
        }
        if let Target::Port(id, port) = &w.to {
            inputs[index[id.as_str()]][*port] = Some(var);
        }
    }

    let mut state_inputs = Vec::new();
    let mut state_outputs = Vec::new();
    let mut unit_inputs = Vec::new();
    let mut unit_outputs = Vec::new();
    for (u, sig) in sigs.iter().enumerate() {
        let mut ins: Vec<Port> = inputs[u].iter().map(|p| p.clone().expect("validated diagram")).collect();
        let mut outs = Vec::new();
        for (port, p) in outputs[u].iter().enumerate() {
            outs.push(p.clone().unwrap_or_else(|| {
                let n = fresh_var(&format!("{}_{port}", units[u].id()), &used);
                used.insert(n.clone());
                Port::new(n, sig.outputs[port])
            }));
        }
        for s in &sig.states {
            let j = state_inputs.len() + 1;
            let si = Port::new(state_input(j), *s);
            let so = Port::new(state_output(j), *s);
            ins.push(si.clone());
            outs.push(so.clone());
            state_inputs.push(si);
            state_outputs.push(so);
        }
        unit_inputs.push(ins);
        unit_outputs.push(outs);
    }
    Naming {
        unit_inputs,
        unit_outputs,
        internal,
        ext_inputs: d.inputs.clone(),
        ext_outputs: d.outputs.clone(),
        state_inputs,
        state_outputs,
    }
}

fn names(ps: &[Port]) -> Vec<String> {
    ps.iter().map(|p| p.name.clone()).collect()
}

fn unit_expr(u: Unit<'_>, strategy: Strategy, avoid: &mut BTreeSet<String>) -> Result<CompExpr, TranslateError> {
    match u {
        Unit::Block(b) => {
            let c = diagram_component(&b.spec, avoid)
                .map_err(|source| TranslateError::Block { id: b.id.clone(), source })?;
            Ok(CompExpr::atomic(c.with_name(b.id.clone())))
        }
        Unit::Subsystem(s) => Ok(translate_checked(&s.diagram, strategy)?.expr),
    }
}

/// Translates a diagram. Subsystems that remain are translated recursively
/// with the same strategy and used as units.
pub fn translate(d: &Diagram, strategy: Strategy) -> Result<Translation, TranslateError> {
    let d = d.checked()?;
    translate_checked(&d, strategy)
}

pub fn translate_fp(d: &Diagram) -> Result<Translation, TranslateError> {
    translate(d, Strategy::Fp)
}

pub fn translate_ic(d: &Diagram) -> Result<Translation, TranslateError> {
    translate(d, Strategy::Ic)
}

fn translate_checked(d: &Diagram, strategy: Strategy) -> Result<Translation, TranslateError> {
    let nm = naming(d);
    let expr = match strategy {
        Strategy::Fp => build_fp(d, &nm)?,
        Strategy::Ic => build_ic(d, &nm)?,
    };
    Ok(Translation {
        strategy,
        expr,
        inputs: nm.ext_inputs.iter().chain(&nm.state_inputs).cloned().collect(),
        outputs: nm.ext_outputs.iter().chain(&nm.state_outputs).cloned().collect(),
        states: nm.state_inputs.len(),
    })
}

fn build_fp(d: &Diagram, nm: &Naming) -> Result<CompExpr, TranslateError> {
    let mut avoid = BTreeSet::new();
    let units = d.units().into_iter().map(|u| unit_expr(u, Strategy::Fp, &mut avoid)).collect::<Result<Vec<_>, _>>()?;
    let in_vars: Vec<Port> = nm.internal.iter().chain(&nm.ext_inputs).chain(&nm.state_inputs).cloned().collect();
    let in_pattern: Vec<String> = nm.unit_inputs.iter().flat_map(|ps| names(ps)).collect();
    let out_vars: Vec<Port> = nm.unit_outputs.iter().flatten().cloned().collect();
    let out_pattern: Vec<String> =
        names(&nm.internal).into_iter().chain(names(&nm.ext_outputs)).chain(names(&nm.state_outputs)).collect();
    let router_in = CompExpr::atomic(make_router(&in_vars, &in_pattern)?);
    let router_out = CompExpr::atomic(make_router(&out_vars, &out_pattern)?);
    let mut e = match CompExpr::parallel_stack(units) {
        Some(body) => CompExpr::serial(CompExpr::serial(router_in, body), router_out),
        None => CompExpr::serial(router_in, router_out),
    };
    for _ in &nm.internal {
        e = CompExpr::feedback(e);
    }
    Ok(e)
}

/// Wires that close a cycle under depth-first search. Roots are the units
/// fed by external inputs, then all others; ids are visited in
/// lexicographic order.
pub fn back_edges(d: &Diagram) -> BTreeSet<usize> {
    let units = d.units();
    let mut succ: BTreeMap<&str, Vec<(&str, usize)>> = units.iter().map(|u| (u.id(), Vec::new())).collect();
    let mut fed: BTreeSet<&str> = BTreeSet::new();
    for (i, w) in d.wires.iter().enumerate() {
        match (&w.from, &w.to) {
            (Source::Port(a, _), Target::Port(b, _)) => succ.get_mut(a.as_str()).unwrap().push((b.as_str(), i)),
            (Source::Input(_), Target::Port(b, _)) => {
                fed.insert(b.as_str());
            }
            _ => {}
        }
    }
    for edges in succ.values_mut() {
        edges.sort();
    }
    let mut roots: Vec<&str> = fed.iter().copied().collect();
    let mut rest: Vec<&str> = units.iter().map(Unit::id).filter(|u| !fed.contains(u)).collect();
    rest.sort();
    roots.extend(rest);

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark: BTreeMap<&str, Mark> = units.iter().map(|u| (u.id(), Mark::New)).collect();
    let mut back = BTreeSet::new();
    for root in roots {
        if mark[root] != Mark::New {
            continue;
        }
        mark.insert(root, Mark::Active);
        let mut stack: Vec<(&str, usize)> = vec![(root, 0)];
        while let Some((node, next)) = stack.pop() {
            let edges = &succ[node];
            if next == edges.len() {
                mark.insert(node, Mark::Done);
                continue;
            }
            stack.push((node, next + 1));
            let (target, wire) = edges[next];
            match mark[target] {
                Mark::Active => {
                    back.insert(wire);
                }
                Mark::New => {
                    mark.insert(target, Mark::Active);
                    stack.push((target, 0));
                }
                Mark::Done => {}
            }
        }
    }
    back
}

/// Units in topological order over the forward wires, smallest id first
/// among the ready ones.
fn topological_order(d: &Diagram, back: &BTreeSet<usize>) -> Vec<usize> {
    let units = d.units();
    let index: BTreeMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (u.id(), i)).collect();
    let mut indegree = vec![0usize; units.len()];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); units.len()];
    for (i, w) in d.wires.iter().enumerate() {
        if back.contains(&i) {
            continue;
        }
        if let (Source::Port(a, _), Target::Port(b, _)) = (&w.from, &w.to) {
            succ[index[a.as_str()]].push(index[b.as_str()]);
            indegree[index[b.as_str()]] += 1;
        }
    }
    let mut ready: BTreeSet<(&str, usize)> =
        (0..units.len()).filter(|&u| indegree[u] == 0).map(|u| (units[u].id(), u)).collect();
    let mut order = Vec::new();
    while let Some(&(id, u)) = ready.iter().next() {
        ready.remove(&(id, u));
        order.push(u);
        for &v in &succ[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.insert((units[v].id(), v));
            }
        }
    }
    debug_assert_eq!(order.len(), units.len(), "forward wires are acyclic");
    order
}

fn identity_bundle(ports: &[Port]) -> Result<CompExpr, TranslateError> {
    Ok(CompExpr::atomic(make_router(ports, &names(ports))?))
}

fn build_ic(d: &Diagram, nm: &Naming) -> Result<CompExpr, TranslateError> {
    let back = back_edges(d);
    let order = topological_order(d, &back);
    let units = d.units();
    let internal_index: Vec<usize> = d
        .wires
        .iter()
        .enumerate()
        .filter(|(_, w)| matches!((&w.from, &w.to), (Source::Port(..), Target::Port(..))))
        .map(|(i, _)| i)
        .collect();
    let loops: Vec<Port> =
        internal_index.iter().zip(&nm.internal).filter(|(i, _)| back.contains(i)).map(|(_, p)| p.clone()).collect();

    let finals: Vec<Port> = loops.iter().chain(&nm.ext_outputs).chain(&nm.state_outputs).cloned().collect();
    // Variables consumed at or after each position of the chain.
    let mut needed_from: Vec<BTreeSet<String>> = vec![names(&finals).into_iter().collect(); order.len() + 1];
    for pos in (0..order.len()).rev() {
        let mut s = needed_from[pos + 1].clone();
        s.extend(names(&nm.unit_inputs[order[pos]]));
        needed_from[pos] = s;
    }

    let mut avoid = BTreeSet::new();
    let mut live: Vec<Port> = loops.iter().chain(&nm.ext_inputs).chain(&nm.state_inputs).cloned().collect();
    let mut chain = Vec::new();
    for (pos, &u) in order.iter().enumerate() {
        let wanted = &nm.unit_inputs[u];
        let wanted_names: BTreeSet<String> = names(wanted).into_iter().collect();
        let rest: Vec<Port> = live
            .iter()
            .filter(|p| !wanted_names.contains(&p.name) && needed_from[pos + 1].contains(&p.name))
            .cloned()
            .collect();
        let pattern: Vec<String> = names(wanted).into_iter().chain(names(&rest)).collect();
        if pos == 0 || pattern != names(&live) {
            chain.push(CompExpr::atomic(make_router(&live, &pattern)?));
        }
        let unit = unit_expr(units[u], Strategy::Ic, &mut avoid)?;
        chain.push(if rest.is_empty() { unit } else { CompExpr::parallel(unit, identity_bundle(&rest)?) });
        live = nm.unit_outputs[u].iter().cloned().chain(rest).collect();
    }
    let pattern = names(&finals);
    if order.is_empty() || pattern != names(&live) {
        chain.push(CompExpr::atomic(make_router(&live, &pattern)?));
    }
    let mut e = CompExpr::serial_chain(chain).expect("non-empty chain");
    for _ in &loops {
        e = CompExpr::feedback(e);
    }
    Ok(e)
}
