use crate::search::{find_witness, holds, Derivation};
use crate::symbolic::{check_sat, Env, Formula, SatResult, TriBool};

use super::{AtomicComponent, ComponentError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equivalence {
    pub verdict: TriBool,
    /// Counterexample when `verdict` is `No`.
    pub witness: Option<Env>,
}

/// Renames `c2` positionally onto the port names of `c1` after checking that
/// arities and sorts agree.
pub(crate) fn align(c1: &AtomicComponent, c2: &AtomicComponent) -> Result<AtomicComponent, ComponentError> {
    let sig = |c: &AtomicComponent| {
        (c.inputs().iter().map(|p| p.sort).collect::<Vec<_>>(), c.outputs().iter().map(|p| p.sort).collect::<Vec<_>>())
    };
    if sig(c1) != sig(c2) {
        return Err(ComponentError::SignatureMismatch(format!(
            "{} inputs/{} outputs against {} inputs/{} outputs",
            c1.inputs().len(),
            c1.outputs().len(),
            c2.inputs().len(),
            c2.outputs().len()
        )));
    }
    c2.with_port_names(&c1.input_names(), &c1.output_names())
}

pub(crate) fn derivation(c: &AtomicComponent) -> Vec<Derivation> {
    match c.fundefs() {
        Some(ts) => vec![c.output_names().into_iter().zip(ts.iter().cloned()).collect()],
        None => Vec::new(),
    }
}

/// Looks for a model of `f`: decision procedure first, sampling when it is
/// inconclusive. `Yes` carries a verified witness.
pub(crate) fn refute(f: &Formula, derivations: &[Derivation], samples: usize, seed: u64) -> (TriBool, Option<Env>) {
    match check_sat(f) {
        SatResult::Unsat => (TriBool::No, None),
        SatResult::Sat(env) if !f.is_quantifier_free() || holds(f, &env) => (TriBool::Yes, Some(env)),
        _ => match find_witness(f, derivations, samples, seed) {
            Some(env) => (TriBool::Yes, Some(env)),
            None => (TriBool::Unknown, None),
        },
    }
}

/// Decides whether two components have equivalent preconditions and, under
/// the precondition, equivalent relations.
pub fn semantically_equal(
    c1: &AtomicComponent,
    c2: &AtomicComponent,
    samples: usize,
    seed: u64,
) -> Result<Equivalence, ComponentError> {
    let c2 = align(c1, c2)?;
    let (p1, p2, r1, r2) = (c1.pre(), c2.pre(), c1.rel(), c2.rel());
    let not = |f: &Formula| Formula::not(f.clone());
    let d1 = derivation(c1);
    let d2 = derivation(&c2);
    let obligations: Vec<(Formula, &[Derivation])> = vec![
        (Formula::and(vec![p1.clone(), not(p2)]), &[]),
        (Formula::and(vec![p2.clone(), not(p1)]), &[]),
        (Formula::and(vec![p1.clone(), r1.clone(), not(r2)]), &d1),
        (Formula::and(vec![p1.clone(), r2.clone(), not(r1)]), &d2),
    ];
    let mut undecided = false;
    for (f, d) in &obligations {
        match refute(f, d, samples, seed) {
            (TriBool::Yes, witness) => return Ok(Equivalence { verdict: TriBool::No, witness }),
            (TriBool::Unknown, _) => undecided = true,
            (TriBool::No, _) => {}
        }
    }
    Ok(Equivalence { verdict: if undecided { TriBool::Unknown } else { TriBool::Yes }, witness: None })
}
