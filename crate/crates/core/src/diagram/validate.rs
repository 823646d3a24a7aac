use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::blocks::{BlockError, BlockSpec, ParamValue};
use crate::symbolic::{fresh_var, Sort};

use super::{BlockInstance, Diagram, Source, Target, Unit, Wire};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("id {0} is reserved")]
    ReservedId(String),
    #[error("duplicate external port name {0}")]
    DuplicatePortName(String),
    #[error("external port name {0} is reserved for state variables")]
    ReservedPortName(String),
    #[error("block {id}: {source}")]
    Block { id: String, source: BlockError },
    #[error("block {id} has {found} initial values for {expected} state ports")]
    InitLength { id: String, expected: usize, found: usize },
    #[error("wire {wire}: unknown endpoint {endpoint}")]
    UnknownEndpoint { wire: usize, endpoint: String },
    #[error("wire {wire}: no port {endpoint}")]
    PortOutOfRange { wire: usize, endpoint: String },
    #[error("wire {wire}: {endpoint} has sort {expected} but the wire carries {found}")]
    SortMismatch { wire: usize, endpoint: String, expected: Sort, found: Sort },
    #[error("input {0} is driven twice")]
    DoubleDriven(String),
    #[error("input {0} is not driven")]
    Dangling(String),
    #[error("in subsystem {name}: {inner}")]
    InSubsystem { name: String, inner: Box<ValidationError> },
}

fn reserved_port_name(n: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    n.strip_prefix("si_").is_some_and(digits) || n.strip_prefix("so_").is_some_and(digits)
}

pub(crate) fn validate(d: &Diagram) -> Result<(), ValidationError> {
    let mut names = BTreeSet::new();
    for p in d.inputs.iter().chain(&d.outputs) {
        if !names.insert(p.name.as_str()) {
            return Err(ValidationError::DuplicatePortName(p.name.clone()));
        }
        if reserved_port_name(&p.name) {
            return Err(ValidationError::ReservedPortName(p.name.clone()));
        }
    }
    for s in &d.subsystems {
        validate(&s.diagram).map_err(|e| ValidationError::InSubsystem { name: s.name.clone(), inner: Box::new(e) })?;
    }
    let mut ids = BTreeSet::new();
    for u in d.units() {
        let id = u.id();
        if id == "in" || id == "out" || id.is_empty() || id.contains('.') {
            return Err(ValidationError::ReservedId(id.to_string()));
        }
        if !ids.insert(id) {
            return Err(ValidationError::DuplicateId(id.to_string()));
        }
    }
    let mut sigs = BTreeMap::new();
    for u in d.units() {
        let sig = match u {
            Unit::Block(b) => {
                let sig = b.spec.signature().map_err(|source| ValidationError::Block { id: b.id.clone(), source })?;
                if !b.init.is_empty() && b.init.len() != sig.states.len() {
                    return Err(ValidationError::InitLength {
                        id: b.id.clone(),
                        expected: sig.states.len(),
                        found: b.init.len(),
                    });
                }
                sig
            }
            Unit::Subsystem(_) => u.signature(),
        };
        sigs.insert(u.id(), sig);
    }
    let mut driven: BTreeSet<Target> = BTreeSet::new();
    for (i, w) in d.wires.iter().enumerate() {
        let source_sort = match &w.from {
            Source::Input(k) => d.inputs.get(*k).map(|p| p.sort),
            Source::Port(id, k) => {
                let sig = sigs
                    .get(id.as_str())
                    .ok_or_else(|| ValidationError::UnknownEndpoint { wire: i, endpoint: w.from.to_string() })?;
                sig.outputs.get(*k).copied()
            }
        }
        .ok_or_else(|| ValidationError::PortOutOfRange { wire: i, endpoint: w.from.to_string() })?;
        let target_sort = match &w.to {
            Target::Output(k) => d.outputs.get(*k).map(|p| p.sort),
            Target::Port(id, k) => {
                let sig = sigs
                    .get(id.as_str())
                    .ok_or_else(|| ValidationError::UnknownEndpoint { wire: i, endpoint: w.to.to_string() })?;
                sig.inputs.get(*k).copied()
            }
        }
        .ok_or_else(|| ValidationError::PortOutOfRange { wire: i, endpoint: w.to.to_string() })?;
        for (endpoint, expected) in [(w.from.to_string(), source_sort), (w.to.to_string(), target_sort)] {
            if expected != w.sort {
                return Err(ValidationError::SortMismatch { wire: i, endpoint, expected, found: w.sort });
            }
        }
        if !driven.insert(w.to.clone()) {
            return Err(ValidationError::DoubleDriven(w.to.to_string()));
        }
    }
    let mut required: Vec<Target> = (0..d.outputs.len()).map(Target::Output).collect();
    for u in d.units() {
        for k in 0..sigs[u.id()].inputs.len() {
            required.push(Target::Port(u.id().to_string(), k));
        }
    }
    for t in required {
        if !driven.contains(&t) {
            return Err(ValidationError::Dangling(t.to_string()));
        }
    }
    Ok(())
}

fn wiring_block(kind: &str, sort: Sort) -> BlockSpec {
    let spec = BlockSpec::new(kind);
    match sort {
        Sort::Real => spec,
        s => spec.with("sort", ParamValue::Text(s.to_string())),
    }
}

fn add_block(d: &mut Diagram, ids: &mut BTreeSet<String>, base: &str, spec: BlockSpec) -> String {
    let id = fresh_var(base, ids);
    ids.insert(id.clone());
    d.blocks.push(BlockInstance { id: id.clone(), spec, init: Vec::new() });
    id
}

/// Routes external pass-through wires through an `Id` block and replaces
/// fan-out by chains of two-way splits. Applied recursively.
pub(crate) fn normalize_wiring(d: &mut Diagram) {
    for s in &mut d.subsystems {
        normalize_wiring(&mut s.diagram);
    }
    let mut ids: BTreeSet<String> = d.units().iter().map(|u| u.id().to_string()).collect();
    ids.insert("in".into());
    ids.insert("out".into());

    let mut wires = Vec::new();
    for w in std::mem::take(&mut d.wires) {
        if let (Source::Input(_), Target::Output(_)) = (&w.from, &w.to) {
            let id = add_block(d, &mut ids, "id", wiring_block("Id", w.sort));
            wires.push(Wire { from: w.from, to: Target::Port(id.clone(), 0), sort: w.sort });
            wires.push(Wire { from: Source::Port(id, 0), to: w.to, sort: w.sort });
        } else {
            wires.push(w);
        }
    }

    let mut fanout: BTreeMap<Source, Vec<usize>> = BTreeMap::new();
    for (i, w) in wires.iter().enumerate() {
        fanout.entry(w.from.clone()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (i, w) in wires.iter().enumerate() {
        let group = &fanout[&w.from];
        if group.len() == 1 {
            out.push(w.clone());
            continue;
        }
        if group[0] != i {
            continue;
        }
        let mut from = w.from.clone();
        let last = group.len() - 1;
        for (n, &j) in group.iter().enumerate() {
            let target = wires[j].to.clone();
            if n == last {
                out.push(Wire { from: from.clone(), to: target, sort: w.sort });
                break;
            }
            let id = add_block(d, &mut ids, "split", wiring_block("Split", w.sort));
            out.push(Wire { from: from.clone(), to: Target::Port(id.clone(), 0), sort: w.sort });
            out.push(Wire { from: Source::Port(id.clone(), 0), to: target, sort: w.sort });
            from = Source::Port(id, 1);
        }
    }
    d.wires = out;
}
