use std::collections::{BTreeMap, BTreeSet};

use crate::symbolic::simplify::definedness;
use crate::symbolic::{decide_linear, eliminate_quantifiers, fresh_var, simplify, Cmp, Formula, Mode, Term, TriBool};

use super::{AtomicComponent, ComponentError, Port};

/// Simplifies and eliminates quantifiers, keeping the quantified form when
/// elimination exceeds its resource limit.
pub(crate) fn reduce(f: &Formula) -> Formula {
    let s = simplify(f);
    if s.is_quantifier_free() {
        return s;
    }
    eliminate_quantifiers(&s).unwrap_or(s)
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(ps) => ps.iter().collect(),
        Formula::True => Vec::new(),
        other => vec![other],
    }
}

/// Domain conditions not already implied by `pre`.
fn residual_defs(pre: &Formula, defs: Vec<Formula>) -> Vec<Formula> {
    let known = conjuncts(pre);
    defs.into_iter()
        .filter(|d| {
            !known.contains(&d)
                && decide_linear(&Formula::implies(pre.clone(), d.clone()), Mode::Validity) != TriBool::Yes
        })
        .collect()
}

fn binding(ports: &[Port], terms: impl IntoIterator<Item = Term>) -> BTreeMap<String, Term> {
    ports.iter().map(|p| p.name.clone()).zip(terms).collect()
}

/// `c1 o c2`: outputs of `c1` feed the inputs of `c2` positionally.
pub fn serial(c1: &AtomicComponent, c2: &AtomicComponent) -> Result<AtomicComponent, ComponentError> {
    if c1.outputs.len() != c2.inputs.len() {
        return Err(ComponentError::ArityMismatch { left: c1.outputs.len(), right: c2.inputs.len() });
    }
    for (o, i) in c1.outputs.iter().zip(&c2.inputs) {
        if o.sort != i.sort {
            return Err(ComponentError::PortSortMismatch { left: o.sort, right: i.sort });
        }
    }
    let mut used: BTreeSet<String> = c1.inputs.iter().map(|p| p.name.clone()).collect();
    let mut outputs = Vec::new();
    for p in &c2.outputs {
        let n = fresh_var(&p.name, &used);
        used.insert(n.clone());
        outputs.push(Port::new(n, p.sort));
    }
    let name = String::new();
    if c1.is_bottom() || c2.is_bottom() {
        return Ok(AtomicComponent::bottom(name, c1.inputs.clone(), outputs));
    }
    let out_binding = binding(&c2.outputs, outputs.iter().map(Port::var));

    if let Some(ts) = &c1.fundefs {
        let mut b = binding(&c2.inputs, ts.iter().cloned());
        b.extend(out_binding);
        let p2 = c2.pre.substitute(&b)?;
        let r2 = c2.rel.substitute(&b)?;
        let defs = definedness(&ts.iter().collect::<Vec<_>>());
        let guard = residual_defs(&c1.pre, defs.clone());
        let pre = if guard.is_empty() {
            Formula::conj(vec![c1.pre.clone(), p2])
        } else {
            Formula::conj(vec![c1.pre.clone(), Formula::implies(Formula::conj(guard), p2)])
        };
        let pre = reduce(&pre);
        let mut rel_parts = residual_defs(&pre, defs);
        let fundefs = match (&c2.fundefs, rel_parts.is_empty()) {
            (Some(us), true) => Some(us.iter().map(|u| u.substitute(&b)).collect::<Vec<_>>()),
            _ => None,
        };
        rel_parts.push(r2);
        let rel = reduce(&Formula::conj(rel_parts));
        return Ok(AtomicComponent::assemble(name, c1.inputs.clone(), outputs, pre, rel, fundefs));
    }

    let mut mids = Vec::new();
    for p in &c1.outputs {
        let m = fresh_var(&p.name, &used);
        used.insert(m.clone());
        mids.push(Port::new(m, p.sort));
    }
    let r1 = c1.rel.substitute(&binding(&c1.outputs, mids.iter().map(Port::var)))?;
    let mut b = binding(&c2.inputs, mids.iter().map(Port::var));
    b.extend(out_binding);
    let p2 = c2.pre.substitute(&b)?;
    let r2 = c2.rel.substitute(&b)?;
    let mut guarded = Formula::implies(r1.clone(), p2.clone());
    let mut joined = Formula::and(vec![r1, r2]);
    for m in mids.iter().rev() {
        guarded = Formula::forall(m.name.clone(), m.sort, guarded);
        joined = Formula::exists(m.name.clone(), m.sort, joined);
    }
    let pre = if p2 == Formula::True { c1.pre.clone() } else { reduce(&Formula::conj(vec![c1.pre.clone(), guarded])) };
    let rel = reduce(&joined);
    Ok(AtomicComponent::assemble(name, c1.inputs.clone(), outputs, pre, rel, None))
}

/// `c1 ** c2`: ports of `c2` that clash with `c1` are renamed.
pub fn parallel(c1: &AtomicComponent, c2: &AtomicComponent) -> Result<AtomicComponent, ComponentError> {
    let mut used: BTreeSet<String> = c1.port_names();
    used.extend(c2.port_names());
    let taken = c1.port_names();
    let mut map = BTreeMap::new();
    for p in c2.inputs.iter().chain(&c2.outputs) {
        if taken.contains(&p.name) {
            let n = fresh_var(&p.name, &used);
            used.insert(n.clone());
            map.insert(p.name.clone(), n);
        }
    }
    let c2 = if map.is_empty() { c2.clone() } else { c2.rename(&map)? };
    let inputs: Vec<Port> = c1.inputs.iter().chain(&c2.inputs).cloned().collect();
    let outputs: Vec<Port> = c1.outputs.iter().chain(&c2.outputs).cloned().collect();
    let name = String::new();
    if c1.is_bottom() || c2.is_bottom() {
        return Ok(AtomicComponent::bottom(name, inputs, outputs));
    }
    let pre = simplify(&Formula::conj(vec![c1.pre.clone(), c2.pre.clone()]));
    let fundefs = match (&c1.fundefs, &c2.fundefs) {
        (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect::<Vec<_>>()),
        _ => None,
    };
    let rel =
        if fundefs.is_some() { Formula::True } else { simplify(&Formula::conj(vec![c1.rel.clone(), c2.rel.clone()])) };
    Ok(AtomicComponent::assemble(name, inputs, outputs, pre, rel, fundefs))
}

/// Defining term of the first output: its fundef, or a top-level conjunct
/// `out = t` of the relation with `t` over inputs only.
fn first_output_definition(c: &AtomicComponent) -> Option<Term> {
    if let Some(ts) = &c.fundefs {
        return ts.first().cloned();
    }
    let out1 = &c.outputs[0].name;
    let inputs: BTreeSet<String> = c.inputs.iter().map(|p| p.name.clone()).collect();
    conjuncts(&c.rel).into_iter().find_map(|p| match p {
        Formula::Atom(Cmp::Eq, a, b) if a.as_var() == Some(out1) && b.free_vars().is_subset(&inputs) => Some(b.clone()),
        Formula::Atom(Cmp::Eq, a, b) if b.as_var() == Some(out1) && a.free_vars().is_subset(&inputs) => Some(a.clone()),
        _ => None,
    })
}

/// Connects the first output to the first input.
pub fn feedback(c: &AtomicComponent) -> Result<AtomicComponent, ComponentError> {
    if c.inputs.is_empty() || c.outputs.is_empty() || c.inputs[0].sort != c.outputs[0].sort {
        return Err(ComponentError::FeedbackShape { component: c.name.clone() });
    }
    let inputs = c.inputs[1..].to_vec();
    let outputs = c.outputs[1..].to_vec();
    let name = String::new();
    if c.is_bottom() {
        return Ok(AtomicComponent::bottom(name, inputs, outputs));
    }
    let in1 = &c.inputs[0];
    let out1 = &c.outputs[0];
    let Some(t) = first_output_definition(c) else {
        return relational_feedback(c, inputs, outputs);
    };
    if t.mentions(&in1.name) {
        return Err(ComponentError::AlgebraicLoop { output: out1.name.clone(), input: in1.name.clone() });
    }
    let mut b = BTreeMap::new();
    b.insert(in1.name.clone(), t.clone());
    let pre = reduce(&c.pre.substitute(&b)?);
    match &c.fundefs {
        Some(ts) => {
            let rest: Vec<Term> = ts[1..].iter().map(|u| u.substitute(&b)).collect();
            let guard = residual_defs(&pre, definedness(&[&t]));
            if guard.is_empty() {
                return Ok(AtomicComponent::assemble(name, inputs, outputs, pre, Formula::True, Some(rest)));
            }
            let mut parts = guard;
            parts.extend(outputs.iter().zip(&rest).map(|(p, u)| Formula::eq(p.var(), u.clone())));
            Ok(AtomicComponent::assemble(name, inputs, outputs, pre, Formula::conj(parts), None))
        }
        None => {
            let rel = Formula::exists(out1.name.clone(), out1.sort, c.rel.substitute(&b)?);
            Ok(AtomicComponent::assemble(name, inputs, outputs, pre, reduce(&rel), None))
        }
    }
}

/// Feedback when the admissible values of the first output do not depend
/// on the first input: every such value may travel along the loop wire,
/// and at least one must exist.
/// The admissible values come from the conjuncts linked to the first output
/// through shared outputs, with those outputs projected away.
fn relational_feedback(
    c: &AtomicComponent,
    inputs: Vec<Port>,
    outputs: Vec<Port>,
) -> Result<AtomicComponent, ComponentError> {
    let in1 = &c.inputs[0];
    let out1 = &c.outputs[0];
    let mut linked: BTreeSet<&str> = BTreeSet::from([out1.name.as_str()]);
    let mut own: Vec<&Formula> = Vec::new();
    let mut pending = conjuncts(&c.rel);
    loop {
        let (hit, miss): (Vec<&Formula>, Vec<&Formula>) =
            pending.into_iter().partition(|p| linked.iter().any(|o| p.mentions(o)));
        if hit.is_empty() {
            break;
        }
        for p in &hit {
            linked.extend(c.outputs.iter().map(|o| o.name.as_str()).filter(|o| p.mentions(o)));
        }
        own.extend(hit);
        pending = miss;
    }
    let choice = c.outputs[1..]
        .iter()
        .filter(|o| linked.contains(o.name.as_str()))
        .rev()
        .fold(Formula::conj(own.into_iter().cloned().collect()), |f, o| Formula::exists(o.name.clone(), o.sort, f));
    // Conjuncts free of the first output only restrict the first input and
    // stay in the relation below.
    let choice =
        Formula::conj(conjuncts(&reduce(&choice)).into_iter().filter(|p| p.mentions(&out1.name)).cloned().collect());
    if choice.mentions(&in1.name) {
        return Err(if choice.is_quantifier_free() {
            ComponentError::AlgebraicLoop { output: out1.name.clone(), input: in1.name.clone() }
        } else {
            ComponentError::NonFunctionalFeedback { component: c.name.clone() }
        });
    }
    let mut used = c.port_names();
    used.extend(c.rel.free_vars());
    let o = fresh_var("w", &used);
    let wire = Term::Var(o.clone(), out1.sort);
    let mut at_out = BTreeMap::new();
    at_out.insert(out1.name.clone(), wire.clone());
    let mut at_in = BTreeMap::new();
    at_in.insert(in1.name.clone(), wire.clone());
    let mut both = at_in.clone();
    both.insert(out1.name.clone(), wire);
    let choice = choice.substitute(&at_out)?;
    let p = c.pre.substitute(&at_in)?;
    let r = c.rel.substitute(&both)?;
    let some = Formula::exists(o.clone(), out1.sort, choice.clone());
    let pre = reduce(&Formula::and(vec![some, Formula::forall(o.clone(), out1.sort, Formula::implies(choice, p))]));
    let rel = reduce(&Formula::exists(o, out1.sort, r));
    Ok(AtomicComponent::assemble(String::new(), inputs, outputs, pre, rel, None))
}
