//! Quantifier elimination for the linear fragment: one-point substitution
//! where possible, Fourier–Motzkin otherwise. Quantifiers whose variable
//! occurs under `sqrt`, in a product or in a denominator are kept.

use std::collections::BTreeMap;

use num::Zero;

use super::fm::{self, Constraint};
use super::formula::{Cmp, Formula};
use super::linear::{canonical_atom, linearize};
use super::simplify::{contextual, definedness, flip_atom, simplify};
use super::term::{Rational, Sort, Term};
use super::SymbolicError;

pub const DEFAULT_ATOM_LIMIT: usize = 10_000;

pub fn eliminate_quantifiers(f: &Formula) -> Result<Formula, SymbolicError> {
    eliminate_quantifiers_with_limit(f, DEFAULT_ATOM_LIMIT)
}

pub fn eliminate_quantifiers_with_limit(f: &Formula, limit: usize) -> Result<Formula, SymbolicError> {
    let f = simplify(&f.freshen());
    if f.is_quantifier_free() {
        return Ok(f);
    }
    let f = contextual(&f);
    let g = qe(&f, limit)?;
    Ok(simplify(&g))
}

fn qe(f: &Formula, limit: usize) -> Result<Formula, SymbolicError> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Atom(..) | Formula::BoolVar(_) => f.clone(),
        Formula::Not(a) => Formula::not(qe(a, limit)?),
        Formula::And(ps) => Formula::And(ps.iter().map(|p| qe(p, limit)).collect::<Result<_, _>>()?),
        Formula::Or(ps) => Formula::Or(ps.iter().map(|p| qe(p, limit)).collect::<Result<_, _>>()?),
        Formula::Implies(a, b) => Formula::implies(qe(a, limit)?, qe(b, limit)?),
        Formula::Exists(v, s, body) => {
            let body = qe(body, limit)?;
            eliminate_exists(v, *s, &body, limit)?
        }
        Formula::Forall(v, s, body) => {
            let body = qe(body, limit)?;
            let negated = nnf(&body, false);
            let e = eliminate_exists(v, *s, &negated, limit)?;
            simplify(&nnf(&e, false))
        }
    })
}

/// Negation normal form. Atoms with partial sides are negated as `~(atom)`;
/// nested quantified formulas are treated as literals.
pub fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::True | Formula::False => {
            if positive == (*f == Formula::True) {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Atom(cmp, a, b) => {
            if positive {
                f.clone()
            } else if a.is_total() && b.is_total() {
                flip_atom(*cmp, a, b)
            } else {
                Formula::not(f.clone())
            }
        }
        Formula::BoolVar(_) => {
            if positive {
                f.clone()
            } else {
                Formula::not(f.clone())
            }
        }
        Formula::Not(a) => nnf(a, !positive),
        Formula::And(ps) | Formula::Or(ps) => {
            let parts = ps.iter().map(|p| nnf(p, positive)).collect();
            if matches!(f, Formula::And(_)) == positive {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::Implies(a, b) => {
            if positive {
                Formula::Or(vec![nnf(a, false), nnf(b, true)])
            } else {
                Formula::And(vec![nnf(a, true), nnf(b, false)])
            }
        }
        Formula::Exists(v, s, body) => {
            if positive {
                f.clone()
            } else {
                Formula::forall(v.clone(), *s, nnf(body, false))
            }
        }
        Formula::Forall(v, s, body) => {
            if positive {
                f.clone()
            } else {
                Formula::exists(v.clone(), *s, nnf(body, false))
            }
        }
    }
}

/// `~A` for an atom with partial sides: `~def(A) | (def(A) & flip(A))`.
pub fn negate_partial_atom(cmp: Cmp, a: &Term, b: &Term) -> Formula {
    let defs = definedness(&[a, b]);
    let mut alts: Vec<Formula> = defs.iter().map(|d| nnf(d, false)).collect();
    let mut inner = defs;
    inner.push(flip_atom(cmp, a, b));
    alts.push(Formula::And(inner));
    Formula::Or(alts)
}

fn expand_partial_negations(f: Formula, y: &str) -> Formula {
    match f {
        Formula::Not(inner) => match *inner {
            Formula::Atom(cmp, a, b) if (a.mentions(y) || b.mentions(y)) && !in_opaque(y, &a, &b) => {
                negate_partial_atom(cmp, &a, &b)
            }
            other => Formula::not(other),
        },
        Formula::And(ps) => Formula::And(ps.into_iter().map(|p| expand_partial_negations(p, y)).collect()),
        Formula::Or(ps) => Formula::Or(ps.into_iter().map(|p| expand_partial_negations(p, y)).collect()),
        other => other,
    }
}

fn in_opaque(y: &str, a: &Term, b: &Term) -> bool {
    a.sort() == Sort::Real && linearize(&(a.clone() - b.clone())).opaque_mentions(y)
}

fn conjuncts(f: Formula) -> Vec<Formula> {
    match f {
        Formula::And(ps) => ps.into_iter().flat_map(conjuncts).collect(),
        Formula::True => Vec::new(),
        other => vec![other],
    }
}

/// Disjunctive normal form of an NNF formula as a list of literal clauses.
pub(crate) fn dnf(f: &Formula, limit: usize) -> Result<Vec<Vec<Formula>>, SymbolicError> {
    Ok(match f {
        Formula::True => vec![Vec::new()],
        Formula::False => Vec::new(),
        Formula::Or(ps) => {
            let mut out = Vec::new();
            for p in ps {
                out.extend(dnf(p, limit)?);
                check_size(&out, limit)?;
            }
            out
        }
        Formula::And(ps) => {
            let mut acc: Vec<Vec<Formula>> = vec![Vec::new()];
            for p in ps {
                let d = dnf(p, limit)?;
                let mut next = Vec::with_capacity(acc.len() * d.len());
                for left in &acc {
                    for right in &d {
                        let mut clause = left.clone();
                        for lit in right {
                            if !clause.contains(lit) {
                                clause.push(lit.clone());
                            }
                        }
                        next.push(clause);
                    }
                }
                check_size(&next, limit)?;
                acc = next;
            }
            acc
        }
        lit => vec![vec![lit.clone()]],
    })
}

fn check_size(clauses: &[Vec<Formula>], limit: usize) -> Result<(), SymbolicError> {
    let atoms: usize = clauses.iter().map(|c| c.len().max(1)).sum();
    if atoms > limit {
        Err(SymbolicError::ResourceLimit { limit })
    } else {
        Ok(())
    }
}

fn eliminate_exists(y: &str, sort: Sort, body: &Formula, limit: usize) -> Result<Formula, SymbolicError> {
    let body = simplify(body);
    if !body.mentions(y) {
        return Ok(body);
    }
    match sort {
        Sort::Unit => Ok(body),
        Sort::Bool => Ok(simplify(&Formula::Or(vec![assign_bool(&body, y, true), assign_bool(&body, y, false)]))),
        Sort::Real => {
            let n = expand_partial_negations(nnf(&body, true), y);
            let (dep, free): (Vec<Formula>, Vec<Formula>) = conjuncts(n).into_iter().partition(|p| p.mentions(y));
            let clauses = dnf(&Formula::And(dep), limit)?;
            let mut alternatives = Vec::new();
            for clause in clauses {
                alternatives.push(eliminate_clause(y, clause, limit)?);
            }
            let mut out = free;
            out.push(Formula::disj(alternatives));
            Ok(simplify(&Formula::conj(out)))
        }
    }
}

fn push_unique(v: &mut Vec<Formula>, f: Formula) {
    if !v.contains(&f) {
        v.push(f);
    }
}

/// Solves an equation literal for `y` when `y` occurs linearly and outside
/// every opaque subterm. Returns the solution and the atom's domain conditions.
fn pivot(y: &str, lit: &Formula) -> Option<(Term, Vec<Formula>)> {
    let Formula::Atom(Cmp::Eq, a, b) = lit else { return None };
    if a.sort() != Sort::Real {
        return None;
    }
    if a.as_var() == Some(y) && !b.mentions(y) {
        return Some((b.clone(), definedness(&[b])));
    }
    if b.as_var() == Some(y) && !a.mentions(y) {
        return Some((a.clone(), definedness(&[a])));
    }
    let lin = linearize(&(a.clone() - b.clone()));
    let key = Term::var(y);
    let c = lin.coeff(&key);
    if c.is_zero() || lin.opaque_mentions(y) {
        return None;
    }
    let mut rest = lin;
    rest.coeffs.remove(&key);
    let t = rest.scale(&(-c.recip())).to_term().fold();
    Some((t, definedness(&[a, b])))
}

fn eliminate_clause(y: &str, clause: Vec<Formula>, limit: usize) -> Result<Formula, SymbolicError> {
    let (dep, mut free): (Vec<Formula>, Vec<Formula>) = clause.into_iter().partition(|p| p.mentions(y));
    if dep.is_empty() {
        return Ok(Formula::conj(free));
    }
    if let Some((i, (t, defs))) = dep.iter().enumerate().find_map(|(i, l)| pivot(y, l).map(|p| (i, p))) {
        let mut m = BTreeMap::new();
        m.insert(y.to_string(), t);
        for d in defs {
            push_unique(&mut free, d);
        }
        for (j, l) in dep.iter().enumerate() {
            if j != i {
                push_unique(&mut free, l.substitute(&m)?);
            }
        }
        return Ok(Formula::conj(free));
    }
    let linear = dep.iter().all(|l| match l {
        Formula::Atom(_, a, b) => a.sort() == Sort::Real && !in_opaque(y, a, b),
        _ => false,
    });
    if !linear {
        free.push(Formula::exists(y, Sort::Real, Formula::conj(dep)));
        return Ok(Formula::conj(free));
    }
    let mut base = Vec::new();
    let mut splits = Vec::new();
    for l in &dep {
        let Formula::Atom(cmp, a, b) = l else { unreachable!() };
        if !(a.is_total() && b.is_total()) {
            for d in definedness(&[a, b]) {
                push_unique(&mut free, d);
            }
        }
        let e = linearize(&(a.clone() - b.clone()));
        match cmp {
            Cmp::Ne => splits.push(e),
            _ => base.push(Constraint::new(e, *cmp)),
        }
    }
    if splits.len() > 16 {
        return Err(SymbolicError::ResourceLimit { limit });
    }
    let key = Term::var(y);
    let mut alternatives = Vec::new();
    for mask in 0u32..(1u32 << splits.len()) {
        let mut cs = base.clone();
        for (k, e) in splits.iter().enumerate() {
            let e = if mask & (1 << k) == 0 { e.clone() } else { e.scale(&-Rational::from_integer(1.into())) };
            cs.push(Constraint::new(e, Cmp::Lt));
        }
        match fm::eliminate(cs, &key, limit)? {
            None => {}
            Some(rest) => {
                alternatives.push(Formula::conj(rest.iter().map(|c| canonical_atom(&c.expr, c.kind)).collect()))
            }
        }
    }
    free.push(Formula::disj(alternatives));
    Ok(Formula::conj(free))
}

/// Replaces the boolean variable `name` by a truth value.
fn assign_bool(f: &Formula, name: &str, value: bool) -> Formula {
    let lit = |other: &str, positive: bool| {
        if positive {
            Formula::bool_var(other)
        } else {
            Formula::not(Formula::bool_var(other))
        }
    };
    let truth = |b: bool| if b { Formula::True } else { Formula::False };
    match f {
        Formula::BoolVar(n) if n == name => truth(value),
        Formula::Atom(cmp @ (Cmp::Eq | Cmp::Ne), a, b) if a.mentions(name) || b.mentions(name) => {
            let eq = *cmp == Cmp::Eq;
            match (a.as_var(), b.as_var()) {
                (Some(p), Some(q)) if p == name && q == name => truth(eq),
                (Some(p), Some(q)) if p == name => lit(q, value == eq),
                (Some(p), Some(q)) if q == name => lit(p, value == eq),
                _ => f.clone(),
            }
        }
        Formula::Not(a) => Formula::not(assign_bool(a, name, value)),
        Formula::And(ps) => Formula::And(ps.iter().map(|p| assign_bool(p, name, value)).collect()),
        Formula::Or(ps) => Formula::Or(ps.iter().map(|p| assign_bool(p, name, value)).collect()),
        Formula::Implies(a, b) => Formula::implies(assign_bool(a, name, value), assign_bool(b, name, value)),
        Formula::Exists(v, s, body) if v != name => Formula::exists(v.clone(), *s, assign_bool(body, name, value)),
        Formula::Forall(v, s, body) if v != name => Formula::forall(v.clone(), *s, assign_bool(body, name, value)),
        _ => f.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn forall_nonnegative_is_false() {
        let f = Formula::forall("y", Sort::Real, Formula::le(Term::int(0), v("y")));
        assert_eq!(eliminate_quantifiers(&f).unwrap(), Formula::False);
    }

    #[test]
    fn bounded_forall_gives_lower_bound() {
        let f = Formula::forall(
            "y",
            Sort::Real,
            Formula::implies(Formula::ge(v("y"), v("x") + Term::int(1)), Formula::le(Term::int(0), v("y"))),
        );
        assert_eq!(eliminate_quantifiers(&f).unwrap().to_string(), "-1 <= x");
    }

    #[test]
    fn single_pivot() {
        let f = Formula::exists(
            "y",
            Sort::Real,
            Formula::and(vec![Formula::le(v("x"), v("y")), Formula::le(v("y"), v("z"))]),
        );
        assert_eq!(eliminate_quantifiers(&f).unwrap().to_string(), "x <= z");
    }

    #[test]
    fn sqrt_occurrence_is_retained() {
        let f = Formula::exists("z", Sort::Real, Formula::eq(v("y"), Term::sqrt(v("z"))));
        assert_eq!(eliminate_quantifiers(&f).unwrap(), f);
    }

    #[test]
    fn disequality_splits() {
        // exists y. y != x  is valid
        let f = Formula::exists("y", Sort::Real, Formula::ne(v("y"), v("x")));
        assert_eq!(eliminate_quantifiers(&f).unwrap(), Formula::True);
        // exists y. x <= y <= x & y != x  ~> False
        let g = Formula::exists(
            "y",
            Sort::Real,
            Formula::and(vec![Formula::le(v("x"), v("y")), Formula::le(v("y"), v("x")), Formula::ne(v("y"), v("x"))]),
        );
        assert_eq!(eliminate_quantifiers(&g).unwrap(), Formula::False);
    }

    #[test]
    fn bool_quantifier_case_split() {
        let b = Term::typed_var("b", Sort::Bool);
        let c = Term::typed_var("c", Sort::Bool);
        let f = Formula::exists(
            "b",
            Sort::Bool,
            Formula::and(vec![Formula::eq(b.clone(), c), Formula::not(Formula::bool_var("b"))]),
        );
        assert_eq!(eliminate_quantifiers(&f).unwrap().to_string(), "~c");
    }

    #[test]
    fn partial_atoms_keep_their_domain() {
        // exists y. sqrt(x) <= y & y <= sqrt(x)  ~>  0 <= x
        let s = Term::sqrt(v("x"));
        let f = Formula::exists(
            "y",
            Sort::Real,
            Formula::and(vec![Formula::le(s.clone(), v("y")), Formula::le(v("y") + Term::int(0) * v("w"), s)]),
        );
        let g = eliminate_quantifiers(&f).unwrap();
        assert!(g.is_quantifier_free());
        assert!(g.to_string().contains("0 <= x"), "{g}");
    }

    #[test]
    fn resource_limit_reported() {
        let mut parts = Vec::new();
        for i in 0..16 {
            let a = v(&format!("a{i}"));
            parts.push(Formula::or(vec![Formula::le(v("y"), a.clone()), Formula::lt(a, v("y") - Term::int(1))]));
        }
        let f = Formula::exists("y", Sort::Real, Formula::and(parts));
        assert!(matches!(eliminate_quantifiers_with_limit(&f, 500), Err(SymbolicError::ResourceLimit { .. })));
    }
}
