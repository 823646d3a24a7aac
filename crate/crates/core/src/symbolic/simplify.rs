//! Rewriting to a fixed point: constant folding, boolean identities, negation
//! pushing, one-point rules and quantifier scoping.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, Zero};

use super::formula::{Cmp, Formula};
use super::linear::linearize;
use super::term::{Rational, Sort, Term};

const MAX_ROUNDS: usize = 64;

pub fn simplify(f: &Formula) -> Formula {
    let mut current = f.clone();
    for _ in 0..MAX_ROUNDS {
        let next = step(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    current
}

fn step(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::BoolVar(_) => f.clone(),
        Formula::Atom(cmp, a, b) => simplify_atom(*cmp, a, b),
        Formula::Not(a) => negate(&step(a)),
        Formula::And(ps) => and(ps.iter().map(step).collect()),
        Formula::Or(ps) => or(ps.iter().map(step).collect()),
        Formula::Implies(a, b) => implies(step(a), step(b)),
        Formula::Exists(v, s, body) => exists(v, *s, step(body)),
        Formula::Forall(v, s, body) => forall(v, *s, step(body)),
    }
}

fn decide_constant(cmp: Cmp, c: &Rational) -> Formula {
    let holds = match cmp {
        Cmp::Lt => c.is_negative(),
        Cmp::Le => !c.is_positive(),
        Cmp::Eq => c.is_zero(),
        Cmp::Ne => !c.is_zero(),
    };
    if holds {
        Formula::True
    } else {
        Formula::False
    }
}

fn reflexive(cmp: Cmp) -> bool {
    matches!(cmp, Cmp::Le | Cmp::Eq)
}

fn simplify_atom(cmp: Cmp, a: &Term, b: &Term) -> Formula {
    let (a, b) = (a.fold(), b.fold());
    if a.is_undefined_constant() || b.is_undefined_constant() {
        return Formula::False;
    }
    if a.sort() == Sort::Unit || b.sort() == Sort::Unit {
        return if reflexive(cmp) { Formula::True } else { Formula::False };
    }
    if a == b {
        if !reflexive(cmp) {
            return Formula::False;
        }
        return Formula::conj(definedness(&[&a]));
    }
    if a.is_total() && b.is_total() && a.sort() == Sort::Real && b.sort() == Sort::Real {
        let lin = linearize(&(a.clone() - b.clone()));
        if lin.is_constant() {
            return decide_constant(cmp, &lin.constant);
        }
    }
    Formula::Atom(cmp, a, b)
}

/// Conditions under which every subterm of `terms` is defined: square-root
/// arguments non-negative and denominators non-zero.
pub fn definedness(terms: &[&Term]) -> Vec<Formula> {
    let mut sqrt_args = Vec::new();
    let mut dens = Vec::new();
    for t in terms {
        t.partiality_conditions(&mut sqrt_args, &mut dens);
    }
    let mut out = Vec::new();
    for a in sqrt_args {
        let f = Formula::le(Term::int(0), a);
        if !out.contains(&f) {
            out.push(f);
        }
    }
    for d in dens {
        let f = Formula::ne(d, Term::int(0));
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

/// Complement of an atom whose sides are total.
pub fn flip_atom(cmp: Cmp, a: &Term, b: &Term) -> Formula {
    match cmp {
        Cmp::Lt => Formula::le(b.clone(), a.clone()),
        Cmp::Le => Formula::lt(b.clone(), a.clone()),
        Cmp::Eq => Formula::ne(a.clone(), b.clone()),
        Cmp::Ne => Formula::eq(a.clone(), b.clone()),
    }
}

/// Pushes a negation one level down (the caller re-simplifies).
pub fn negate(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(g) => (**g).clone(),
        Formula::And(ps) => Formula::Or(ps.iter().map(negate).collect()),
        Formula::Or(ps) => Formula::And(ps.iter().map(negate).collect()),
        Formula::Implies(a, b) => Formula::And(vec![(**a).clone(), negate(b)]),
        Formula::Exists(v, s, b) => Formula::Forall(v.clone(), *s, Box::new(negate(b))),
        Formula::Forall(v, s, b) => Formula::Exists(v.clone(), *s, Box::new(negate(b))),
        Formula::Atom(cmp, a, b) if a.is_total() && b.is_total() => flip_atom(*cmp, a, b),
        _ => Formula::not(f.clone()),
    }
}

fn is_literal(f: &Formula) -> bool {
    matches!(f, Formula::Atom(..) | Formula::BoolVar(_) | Formula::Not(_))
}

fn and(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    let mut seen = BTreeSet::new();
    let mut queue: Vec<Formula> = parts;
    queue.reverse();
    while let Some(p) = queue.pop() {
        match p {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::And(inner) => queue.extend(inner.into_iter().rev()),
            other => {
                if seen.insert(other.clone()) {
                    flat.push(other);
                }
            }
        }
    }
    for p in flat.iter().filter(|p| is_literal(p)) {
        if seen.contains(&negate(p)) {
            return Formula::False;
        }
    }
    Formula::conj(flat)
}

fn or(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    let mut seen = BTreeSet::new();
    let mut queue: Vec<Formula> = parts;
    queue.reverse();
    while let Some(p) = queue.pop() {
        match p {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Or(inner) => queue.extend(inner.into_iter().rev()),
            other => {
                if seen.insert(other.clone()) {
                    flat.push(other);
                }
            }
        }
    }
    for p in flat.iter().filter(|p| is_literal(p)) {
        if seen.contains(&negate(p)) {
            return Formula::True;
        }
    }
    Formula::disj(flat)
}

fn implies(a: Formula, b: Formula) -> Formula {
    match (&a, &b) {
        (Formula::True, _) => b,
        (Formula::False, _) | (_, Formula::True) => Formula::True,
        (_, Formula::False) => negate(&a),
        _ if a == b => Formula::True,
        _ => Formula::implies(a, b),
    }
}

fn conjuncts(f: Formula) -> Vec<Formula> {
    match f {
        Formula::And(ps) => ps,
        other => vec![other],
    }
}

/// Finds a conjunct `v = t` (or a total linear equation solvable for `v`)
/// with `t` free of `v`. Returns its index and `t`.
pub fn find_point(v: &str, sort: Sort, parts: &[Formula]) -> Option<(usize, Term)> {
    for (i, p) in parts.iter().enumerate() {
        if let Formula::Atom(Cmp::Eq, a, b) = p {
            if a.as_var() == Some(v) && !b.mentions(v) && b.sort() == sort {
                return Some((i, b.clone()));
            }
            if b.as_var() == Some(v) && !a.mentions(v) && a.sort() == sort {
                return Some((i, a.clone()));
            }
        }
    }
    if sort != Sort::Real {
        return None;
    }
    for (i, p) in parts.iter().enumerate() {
        if let Some(t) = solve_equation(v, p) {
            return Some((i, t));
        }
    }
    None
}

/// Solves a total linear equation for `v`.
pub fn solve_equation(v: &str, p: &Formula) -> Option<Term> {
    let Formula::Atom(Cmp::Eq, a, b) = p else { return None };
    if !a.is_total() || !b.is_total() || a.sort() != Sort::Real || b.sort() != Sort::Real {
        return None;
    }
    let lin = linearize(&(a.clone() - b.clone()));
    let key = Term::var(v);
    let c = lin.coeff(&key);
    if c.is_zero() || lin.opaque_mentions(v) {
        return None;
    }
    let mut rest = lin;
    rest.coeffs.remove(&key);
    Some(rest.scale(&(-c.recip())).to_term().fold())
}

fn bind(v: &str, t: &Term) -> BTreeMap<String, Term> {
    let mut m = BTreeMap::new();
    m.insert(v.to_string(), t.clone());
    m
}

fn exists(v: &str, sort: Sort, body: Formula) -> Formula {
    if !body.mentions(v) {
        return body;
    }
    if let Formula::Or(ps) = body {
        return Formula::Or(ps.into_iter().map(|p| Formula::exists(v, sort, p)).collect());
    }
    let (dep, indep): (Vec<Formula>, Vec<Formula>) = conjuncts(body).into_iter().partition(|p| p.mentions(v));
    if let Some((i, t)) = find_point(v, sort, &dep) {
        let m = bind(v, &t);
        let substituted: Option<Vec<Formula>> =
            dep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.substitute(&m).ok()).collect();
        if let Some(rest) = substituted {
            let mut out = indep;
            out.extend(definedness(&[&t]));
            out.extend(rest);
            return Formula::conj(out);
        }
    }
    let inner = Formula::exists(v, sort, Formula::conj(dep));
    if indep.is_empty() {
        inner
    } else {
        let mut out = indep;
        out.push(inner);
        Formula::And(out)
    }
}

fn forall(v: &str, sort: Sort, body: Formula) -> Formula {
    if !body.mentions(v) {
        return body;
    }
    match body {
        Formula::And(ps) => Formula::And(ps.into_iter().map(|p| Formula::forall(v, sort, p)).collect()),
        Formula::Implies(a, b) => {
            if !a.mentions(v) {
                return Formula::implies(*a, Formula::forall(v, sort, *b));
            }
            if !b.mentions(v) {
                return Formula::implies(Formula::exists(v, sort, *a), *b);
            }
            let ante = conjuncts(*a);
            if let Some((i, t)) = find_point(v, sort, &ante) {
                let m = bind(v, &t);
                let rest: Option<Vec<Formula>> =
                    ante.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.substitute(&m).ok()).collect();
                if let (Some(rest), Ok(b)) = (rest, b.substitute(&m)) {
                    let core = Formula::implies(Formula::conj(rest), b);
                    let defs = definedness(&[&t]);
                    return if defs.is_empty() { core } else { Formula::implies(Formula::conj(defs), core) };
                }
            }
            Formula::forall(v, sort, Formula::Implies(Box::new(Formula::conj(ante)), b))
        }
        Formula::Or(ps) => {
            let (dep, indep): (Vec<Formula>, Vec<Formula>) = ps.into_iter().partition(|p| p.mentions(v));
            if !indep.is_empty() {
                let mut out = indep;
                out.push(Formula::forall(v, sort, Formula::disj(dep)));
                return Formula::Or(out);
            }
            for (i, p) in dep.iter().enumerate() {
                let Formula::Atom(Cmp::Ne, a, b) = p else { continue };
                let t = if a.as_var() == Some(v) && !b.mentions(v) {
                    b
                } else if b.as_var() == Some(v) && !a.mentions(v) {
                    a
                } else {
                    continue;
                };
                if !t.is_total() || t.sort() != sort {
                    continue;
                }
                let m = bind(v, t);
                let rest: Option<Vec<Formula>> =
                    dep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q.substitute(&m).ok()).collect();
                if let Some(rest) = rest {
                    return Formula::disj(rest);
                }
            }
            Formula::forall(v, sort, Formula::disj(dep))
        }
        other => Formula::forall(v, sort, other),
    }
}

/// Replaces subformulas that already hold in their context by `True`, so
/// `P & (P -> X)` becomes `P & X`. Facts come from earlier conjuncts and
/// implication premises; entering a quantifier drops facts about its variable.
pub fn contextual(f: &Formula) -> Formula {
    simplify(&assume(f, &mut Vec::new()))
}

fn push_facts(f: &Formula, facts: &mut Vec<Formula>) {
    match f {
        Formula::True => {}
        Formula::And(ps) => ps.iter().for_each(|p| push_facts(p, facts)),
        _ => facts.push(f.clone()),
    }
}

fn assume(f: &Formula, facts: &mut Vec<Formula>) -> Formula {
    if facts.contains(f) {
        return Formula::True;
    }
    match f {
        Formula::And(ps) => {
            let base = facts.len();
            let mut out = Vec::with_capacity(ps.len());
            for p in ps {
                let q = assume(p, facts);
                push_facts(&q, facts);
                out.push(q);
            }
            facts.truncate(base);
            Formula::conj(out)
        }
        Formula::Implies(a, b) => {
            let a = assume(a, facts);
            let base = facts.len();
            push_facts(&a, facts);
            let b = assume(b, facts);
            facts.truncate(base);
            Formula::implies(a, b)
        }
        Formula::Or(ps) => Formula::disj(ps.iter().map(|p| assume(p, facts)).collect()),
        Formula::Not(a) => Formula::not(assume(a, facts)),
        Formula::Exists(v, s, body) | Formula::Forall(v, s, body) => {
            let mut inner: Vec<Formula> = facts.iter().filter(|g| !g.mentions(v)).cloned().collect();
            let body = assume(body, &mut inner);
            match f {
                Formula::Exists(..) => Formula::exists(v.clone(), *s, body),
                _ => Formula::forall(v.clone(), *s, body),
            }
        }
        _ => f.clone(),
    }
}
