//! Fourier–Motzkin elimination over exact rationals with strict/non-strict
//! bookkeeping and model reconstruction.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, Zero};

use super::formula::Cmp;
use super::linear::LinExpr;
use super::term::{Rational, Term};
use super::SymbolicError;

/// `expr kind 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub expr: LinExpr,
    pub kind: Cmp,
}

pub type Model = BTreeMap<Term, Rational>;

enum Normalized {
    Trivial(bool),
    Open(Constraint),
}

impl Constraint {
    pub fn new(expr: LinExpr, kind: Cmp) -> Constraint {
        Constraint { expr, kind }
    }

    fn normalize(self) -> Normalized {
        if self.expr.is_constant() {
            let c = &self.expr.constant;
            return Normalized::Trivial(match self.kind {
                Cmp::Lt => c.is_negative(),
                Cmp::Le => !c.is_positive(),
                Cmp::Eq => c.is_zero(),
                Cmp::Ne => !c.is_zero(),
            });
        }
        let mut expr = self.expr.normalized_positive();
        if matches!(self.kind, Cmp::Eq | Cmp::Ne) {
            if let Some((_, lead)) = expr.coeffs.iter().next() {
                if lead.is_negative() {
                    expr = expr.scale(&-Rational::from_integer(1.into()));
                }
            }
        }
        Normalized::Open(Constraint { expr, kind: self.kind })
    }

    pub fn holds_at(&self, model: &Model) -> bool {
        let v = evaluate(&self.expr, model);
        match self.kind {
            Cmp::Lt => v.is_negative(),
            Cmp::Le => !v.is_positive(),
            Cmp::Eq => v.is_zero(),
            Cmp::Ne => !v.is_zero(),
        }
    }
}

fn evaluate(expr: &LinExpr, model: &Model) -> Rational {
    let mut v = expr.constant.clone();
    for (k, c) in &expr.coeffs {
        if let Some(x) = model.get(k) {
            v += c * x;
        }
    }
    v
}

/// Normalizes, drops tautologies and duplicates. `None` if some constraint is
/// trivially false.
fn tidy(cs: Vec<Constraint>) -> Option<Vec<Constraint>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in cs {
        match c.normalize() {
            Normalized::Trivial(true) => {}
            Normalized::Trivial(false) => return None,
            Normalized::Open(c) => {
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
        }
    }
    Some(out)
}

struct Budget {
    used: usize,
    limit: usize,
}

impl Budget {
    fn charge(&mut self, n: usize) -> Result<(), SymbolicError> {
        self.used += n;
        if self.used > self.limit {
            Err(SymbolicError::ResourceLimit { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

enum Step {
    Def(Term, LinExpr),
    Bounds(Term, Vec<Constraint>),
}

/// Eliminates one key from a set of constraints (equality pivot if available,
/// otherwise pairwise combination of bounds). `Ne` constraints on `key` must
/// have been split by the caller. Returns `None` when infeasible.
pub fn eliminate(
    constraints: Vec<Constraint>,
    key: &Term,
    limit: usize,
) -> Result<Option<Vec<Constraint>>, SymbolicError> {
    let mut budget = Budget { used: constraints.len(), limit };
    let Some(cs) = tidy(constraints) else { return Ok(None) };
    let (rest, _) = eliminate_step(cs, key, &mut budget)?;
    Ok(tidy(rest))
}

fn eliminate_step(
    cs: Vec<Constraint>,
    key: &Term,
    budget: &mut Budget,
) -> Result<(Vec<Constraint>, Step), SymbolicError> {
    if let Some(pos) = cs.iter().position(|c| c.kind == Cmp::Eq && !c.expr.coeff(key).is_zero()) {
        let pivot = &cs[pos];
        let a = pivot.expr.coeff(key);
        let mut rest = pivot.expr.clone();
        rest.coeffs.remove(key);
        let def = rest.scale(&(-a.recip()));
        let out: Vec<Constraint> = cs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, c)| Constraint::new(c.expr.substitute_key(key, &def), c.kind))
            .collect();
        budget.charge(out.len())?;
        return Ok((out, Step::Def(key.clone(), def)));
    }
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    let mut rest = Vec::new();
    let mut involved = Vec::new();
    for c in cs {
        let a = c.expr.coeff(key);
        if a.is_zero() {
            rest.push(c);
        } else {
            debug_assert!(c.kind != Cmp::Ne, "disequalities must be split before elimination");
            involved.push(c.clone());
            if a.is_negative() {
                lowers.push(c);
            } else {
                uppers.push(c);
            }
        }
    }
    budget.charge(lowers.len() * uppers.len())?;
    for l in &lowers {
        let a = -l.expr.coeff(key);
        for u in &uppers {
            let b = u.expr.coeff(key);
            // b*l + a*u cancels the key; both multipliers are positive.
            let mut e = l.expr.scale(&b);
            e.add_scaled(&u.expr, &a);
            e.coeffs.remove(key);
            let kind = if l.kind == Cmp::Lt || u.kind == Cmp::Lt { Cmp::Lt } else { Cmp::Le };
            rest.push(Constraint::new(e, kind));
        }
    }
    Ok((rest, Step::Bounds(key.clone(), involved)))
}

fn keys_of(cs: &[Constraint]) -> BTreeSet<Term> {
    cs.iter().flat_map(|c| c.expr.coeffs.keys().cloned()).collect()
}

fn pick_key(cs: &[Constraint]) -> Option<Term> {
    if let Some(c) = cs.iter().find(|c| c.kind == Cmp::Eq) {
        return c.expr.coeffs.keys().next().cloned();
    }
    keys_of(cs).into_iter().min_by_key(|k| {
        let (mut lo, mut hi) = (0usize, 0usize);
        for c in cs {
            let a = c.expr.coeff(k);
            if a.is_negative() {
                lo += 1;
            } else if a.is_positive() {
                hi += 1;
            }
        }
        lo * hi
    })
}

/// Decides a conjunction of constraints. Returns a satisfying assignment of
/// every key that occurs, or `None` if the conjunction is infeasible.
pub fn solve(constraints: Vec<Constraint>, limit: usize) -> Result<Option<Model>, SymbolicError> {
    let mut budget = Budget { used: 0, limit };
    solve_inner(constraints, &mut budget)
}

fn solve_inner(constraints: Vec<Constraint>, budget: &mut Budget) -> Result<Option<Model>, SymbolicError> {
    budget.charge(constraints.len())?;
    let Some(cs) = tidy(constraints) else { return Ok(None) };
    if let Some(pos) = cs.iter().position(|c| c.kind == Cmp::Ne) {
        let ne = cs[pos].clone();
        let others: Vec<Constraint> =
            cs.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, c)| c.clone()).collect();
        for branch in [
            Constraint::new(ne.expr.clone(), Cmp::Lt),
            Constraint::new(ne.expr.scale(&-Rational::from_integer(1.into())), Cmp::Lt),
        ] {
            let mut next = others.clone();
            next.push(branch);
            if let Some(m) = solve_inner(next, budget)? {
                return Ok(Some(m));
            }
        }
        return Ok(None);
    }
    let all_keys = keys_of(&cs);
    let mut steps = Vec::new();
    let mut current = cs;
    while let Some(key) = pick_key(&current) {
        let (rest, step) = eliminate_step(current, &key, budget)?;
        steps.push(step);
        match tidy(rest) {
            None => return Ok(None),
            Some(r) => current = r,
        }
    }
    let mut model = Model::new();
    for step in steps.into_iter().rev() {
        match step {
            Step::Def(key, def) => {
                fill_defaults(&def, &mut model);
                let v = evaluate(&def, &model);
                model.insert(key, v);
            }
            Step::Bounds(key, involved) => {
                for c in &involved {
                    let mut others = c.expr.clone();
                    others.coeffs.remove(&key);
                    fill_defaults(&others, &mut model);
                }
                let v = choose_value(&key, &involved, &model);
                model.insert(key, v);
            }
        }
    }
    for k in all_keys {
        model.entry(k).or_insert_with(Rational::zero);
    }
    Ok(Some(model))
}

fn fill_defaults(expr: &LinExpr, model: &mut Model) {
    for k in expr.coeffs.keys() {
        model.entry(k.clone()).or_insert_with(Rational::zero);
    }
}

fn choose_value(key: &Term, involved: &[Constraint], model: &Model) -> Rational {
    // (bound, strict)
    let mut lo: Option<(Rational, bool)> = None;
    let mut hi: Option<(Rational, bool)> = None;
    for c in involved {
        let a = c.expr.coeff(key);
        let mut others = c.expr.clone();
        others.coeffs.remove(key);
        let bound = -evaluate(&others, model) / &a;
        let strict = c.kind == Cmp::Lt;
        if a.is_negative() {
            let tighter = match &lo {
                None => true,
                Some((b, s)) => bound > *b || (bound == *b && strict && !s),
            };
            if tighter {
                lo = Some((bound, strict));
            }
        } else {
            let tighter = match &hi {
                None => true,
                Some((b, s)) => bound < *b || (bound == *b && strict && !s),
            };
            if tighter {
                hi = Some((bound, strict));
            }
        }
    }
    let above = |v: &Rational| match &lo {
        None => true,
        Some((b, s)) => v > b || (!s && v == b),
    };
    let below = |v: &Rational| match &hi {
        None => true,
        Some((b, s)) => v < b || (!s && v == b),
    };
    let zero = Rational::zero();
    if above(&zero) && below(&zero) {
        return zero;
    }
    let mut candidates = Vec::new();
    if let Some((b, _)) = &lo {
        candidates.push(b.ceil());
        candidates.push(b.floor() + Rational::from_integer(1.into()));
    }
    if let Some((b, _)) = &hi {
        candidates.push(b.floor());
        candidates.push(b.ceil() - Rational::from_integer(1.into()));
    }
    if let Some(v) = candidates.into_iter().find(|v| above(v) && below(v)) {
        return v;
    }
    match (&lo, &hi) {
        (Some((l, _)), Some((h, _))) if l == h => l.clone(),
        (Some((l, _)), Some((h, _))) => (l + h) / Rational::from_integer(2.into()),
        // Unreachable for feasible systems; any value keeps the caller total.
        _ => zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::linear::linearize;

    fn c(t: Term, kind: Cmp) -> Constraint {
        Constraint::new(linearize(&t), kind)
    }

    fn x() -> Term {
        Term::var("x")
    }
    fn y() -> Term {
        Term::var("y")
    }

    #[test]
    fn empty_interval_is_infeasible() {
        // x >= -1, x <= -2
        let cs = vec![c(Term::int(-1) - x(), Cmp::Le), c(x() + Term::int(2), Cmp::Le)];
        assert_eq!(solve(cs, 1000).unwrap(), None);
    }

    #[test]
    fn strictness_matters() {
        // x < 0 and 0 <= x
        let cs = vec![c(x(), Cmp::Lt), c(-x(), Cmp::Le)];
        assert_eq!(solve(cs, 1000).unwrap(), None);
        // x <= 0 and 0 <= x
        let cs = vec![c(x(), Cmp::Le), c(-x(), Cmp::Le)];
        let m = solve(cs, 1000).unwrap().unwrap();
        assert_eq!(m[&x()], Rational::zero());
    }

    #[test]
    fn models_satisfy_constraints() {
        // x + 1 <= y, y <= x + 2, y != x + 1, x > 3
        let cs = vec![
            c(x() + Term::int(1) - y(), Cmp::Le),
            c(y() - x() - Term::int(2), Cmp::Le),
            c(y() - x() - Term::int(1), Cmp::Ne),
            c(Term::int(3) - x(), Cmp::Lt),
        ];
        let m = solve(cs.clone(), 1000).unwrap().unwrap();
        for k in &cs {
            assert!(k.holds_at(&m), "{k:?} fails at {m:?}");
        }
    }

    #[test]
    fn equality_pivot() {
        // y = 3x, y != 2x
        let cs = vec![c(y() - Term::int(3) * x(), Cmp::Eq), c(y() - Term::int(2) * x(), Cmp::Ne)];
        let m = solve(cs.clone(), 1000).unwrap().unwrap();
        assert!(cs.iter().all(|k| k.holds_at(&m)));
    }

    #[test]
    fn single_pivot_elimination() {
        // exists y. x <= y <= z  ~>  x <= z
        let cs = vec![c(x() - y(), Cmp::Le), c(y() - Term::var("z"), Cmp::Le)];
        let out = eliminate(cs, &y(), 1000).unwrap().unwrap();
        assert_eq!(out, vec![c(x() - Term::var("z"), Cmp::Le)]);
    }

    #[test]
    fn budget_is_enforced() {
        let mut cs = Vec::new();
        for i in 0..60 {
            cs.push(c(Term::int(i) - y() + Term::var(format!("a{i}")), Cmp::Le));
            cs.push(c(y() - Term::var(format!("b{i}")), Cmp::Le));
        }
        assert!(matches!(eliminate(cs, &y(), 1000), Err(SymbolicError::ResourceLimit { .. })));
    }
}
