//! First-order formulas over real arithmetic, substitution and fresh names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::term::{Sort, Term};
use super::SymbolicError;

/// Comparison operators. `>` and `>=` are expressed by swapping operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Cmp, Term, Term),
    BoolVar(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Sort, Box<Formula>),
    Forall(String, Sort, Box<Formula>),
}

/// Returns `base` if unused, otherwise `base_k` for the smallest `k >= 1` not in `avoid`.
pub fn fresh_var(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    (1..).map(|k| format!("{base}_{k}")).find(|candidate| !avoid.contains(candidate)).expect("unbounded suffix search")
}

impl Formula {
    pub fn atom(cmp: Cmp, lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(cmp, lhs, rhs)
    }

    pub fn lt(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Cmp::Lt, lhs, rhs)
    }

    pub fn le(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Cmp::Le, lhs, rhs)
    }

    pub fn eq(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Cmp::Eq, lhs, rhs)
    }

    pub fn ne(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Cmp::Ne, lhs, rhs)
    }

    pub fn ge(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Cmp::Le, rhs, lhs)
    }

    pub fn gt(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Cmp::Lt, rhs, lhs)
    }

    pub fn bool_var(name: impl Into<String>) -> Formula {
        Formula::BoolVar(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        Formula::Or(parts)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(var: impl Into<String>, sort: Sort, body: Formula) -> Formula {
        Formula::Exists(var.into(), sort, Box::new(body))
    }

    pub fn forall(var: impl Into<String>, sort: Sort, body: Formula) -> Formula {
        Formula::Forall(var.into(), sort, Box::new(body))
    }

    /// Conjunction that skips `True` operands and collapses trivial cases.
    pub fn conj(parts: Vec<Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().filter(|p| *p != Formula::True).collect();
        if parts.contains(&Formula::False) {
            return Formula::False;
        }
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction that skips `False` operands and collapses trivial cases.
    pub fn disj(parts: Vec<Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().filter(|p| *p != Formula::False).collect();
        if parts.contains(&Formula::True) {
            return Formula::True;
        }
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::BoolVar(_) => true,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(_, a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::BoolVar(n) => {
                out.insert(n.clone());
            }
            Formula::Not(a) => a.free_vars_into(out),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.free_vars_into(out)),
            Formula::Implies(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Exists(v, _, body) | Formula::Forall(v, _, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    /// Sorts of free variables, as recorded at their occurrences.
    pub fn free_var_sorts(&self) -> BTreeMap<String, Sort> {
        let mut out = BTreeMap::new();
        self.var_sorts_into(&mut out, &BTreeSet::new());
        out
    }

    fn var_sorts_into(&self, out: &mut BTreeMap<String, Sort>, bound: &BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(_, a, b) => {
                let mut local = BTreeMap::new();
                a.var_sorts_into(&mut local);
                b.var_sorts_into(&mut local);
                for (n, s) in local {
                    if !bound.contains(&n) {
                        out.entry(n).or_insert(s);
                    }
                }
            }
            Formula::BoolVar(n) => {
                if !bound.contains(n) {
                    out.entry(n.clone()).or_insert(Sort::Bool);
                }
            }
            Formula::Not(a) => a.var_sorts_into(out, bound),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.var_sorts_into(out, bound)),
            Formula::Implies(a, b) => {
                a.var_sorts_into(out, bound);
                b.var_sorts_into(out, bound);
            }
            Formula::Exists(v, _, body) | Formula::Forall(v, _, body) => {
                let mut bound = bound.clone();
                bound.insert(v.clone());
                body.var_sorts_into(out, &bound);
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Atom(_, a, b) => a.mentions(name) || b.mentions(name),
            Formula::BoolVar(n) => n == name,
            Formula::Not(a) => a.mentions(name),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().any(|p| p.mentions(name)),
            Formula::Implies(a, b) => a.mentions(name) || b.mentions(name),
            Formula::Exists(v, _, body) | Formula::Forall(v, _, body) => v != name && body.mentions(name),
        }
    }

    /// Number of atoms, used for resource accounting and statistics.
    pub fn atom_count(&self) -> usize {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Atom(..) | Formula::BoolVar(_) => 1,
            Formula::Not(a) => a.atom_count(),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().map(Formula::atom_count).sum(),
            Formula::Implies(a, b) => a.atom_count() + b.atom_count(),
            Formula::Exists(_, _, b) | Formula::Forall(_, _, b) => b.atom_count(),
        }
    }

    /// Capture-avoiding parallel substitution of free variables.
    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Result<Formula, SymbolicError> {
        if binding.is_empty() {
            return Ok(self.clone());
        }
        Ok(match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(cmp, a, b) => Formula::Atom(*cmp, substitute_term(a, binding)?, substitute_term(b, binding)?),
            Formula::BoolVar(n) => match binding.get(n) {
                None => self.clone(),
                Some(Term::Var(m, Sort::Bool)) => Formula::BoolVar(m.clone()),
                Some(t) => {
                    return Err(SymbolicError::SortMismatch { var: n.clone(), expected: Sort::Bool, found: t.sort() })
                }
            },
            Formula::Not(a) => Formula::Not(Box::new(a.substitute(binding)?)),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.substitute(binding)).collect::<Result<_, _>>()?),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.substitute(binding)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => {
                Formula::Implies(Box::new(a.substitute(binding)?), Box::new(b.substitute(binding)?))
            }
            Formula::Exists(v, s, body) => {
                let (v, body) = substitute_under_binder(v, *s, body, binding)?;
                Formula::Exists(v, *s, Box::new(body))
            }
            Formula::Forall(v, s, body) => {
                let (v, body) = substitute_under_binder(v, *s, body, binding)?;
                Formula::Forall(v, *s, Box::new(body))
            }
        })
    }

    /// Renames bound variables so that no binder shadows another binder or a
    /// free variable of the formula.
    pub fn freshen(&self) -> Formula {
        let mut used = self.free_vars();
        self.freshen_with(&mut used)
    }

    fn freshen_with(&self, used: &mut BTreeSet<String>) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::BoolVar(_) => self.clone(),
            Formula::Not(a) => Formula::Not(Box::new(a.freshen_with(used))),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.freshen_with(used)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.freshen_with(used)).collect()),
            Formula::Implies(a, b) => {
                let a = a.freshen_with(used);
                Formula::Implies(Box::new(a), Box::new(b.freshen_with(used)))
            }
            Formula::Exists(v, s, body) | Formula::Forall(v, s, body) => {
                let name = fresh_var(v, used);
                used.insert(name.clone());
                let body = if &name == v {
                    (**body).clone()
                } else {
                    let mut m = BTreeMap::new();
                    m.insert(v.clone(), Term::Var(name.clone(), *s));
                    body.substitute(&m).expect("renaming preserves sorts")
                };
                let body = Box::new(body.freshen_with(used));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(name, *s, body)
                } else {
                    Formula::Forall(name, *s, body)
                }
            }
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

fn substitute_term(t: &Term, binding: &BTreeMap<String, Term>) -> Result<Term, SymbolicError> {
    check_term_sorts(t, binding)?;
    Ok(t.substitute(binding))
}

fn check_term_sorts(t: &Term, binding: &BTreeMap<String, Term>) -> Result<(), SymbolicError> {
    match t {
        Term::Var(n, s) => match binding.get(n) {
            Some(r) if r.sort() != *s => {
                Err(SymbolicError::SortMismatch { var: n.clone(), expected: *s, found: r.sort() })
            }
            _ => Ok(()),
        },
        Term::Const(_) => Ok(()),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
            check_term_sorts(a, binding)?;
            check_term_sorts(b, binding)
        }
        Term::Neg(a) | Term::Sqrt(a) => check_term_sorts(a, binding),
    }
}

fn substitute_under_binder(
    var: &str,
    sort: Sort,
    body: &Formula,
    binding: &BTreeMap<String, Term>,
) -> Result<(String, Formula), SymbolicError> {
    let body_free = body.free_vars();
    let relevant: BTreeMap<String, Term> = binding
        .iter()
        .filter(|(k, _)| k.as_str() != var && body_free.contains(*k))
        .map(|(k, t)| (k.clone(), t.clone()))
        .collect();
    if relevant.is_empty() {
        return Ok((var.to_string(), body.clone()));
    }
    let mut range_vars = BTreeSet::new();
    for t in relevant.values() {
        t.free_vars_into(&mut range_vars);
    }
    if range_vars.contains(var) {
        let mut avoid = body_free.clone();
        avoid.extend(range_vars);
        avoid.extend(relevant.keys().cloned());
        let renamed = fresh_var(var, &avoid);
        let mut rename = BTreeMap::new();
        rename.insert(var.to_string(), Term::Var(renamed.clone(), sort));
        let body = body.substitute(&rename)?;
        Ok((renamed, body.substitute(&relevant)?))
    } else {
        Ok((var.to_string(), body.substitute(&relevant)?))
    }
}

impl fmt::Display for Formula {
    /// Canonical rendering: connectives fully parenthesized, atoms bare.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("True"),
            Formula::False => f.write_str("False"),
            Formula::Atom(cmp, a, b) => write!(f, "{a} {} {b}", cmp.symbol()),
            Formula::BoolVar(n) => f.write_str(n),
            Formula::Not(a) => {
                f.write_str("~")?;
                a.fmt_operand(f)
            }
            Formula::And(ps) | Formula::Or(ps) => {
                if ps.is_empty() {
                    return f.write_str(if matches!(self, Formula::And(_)) { "True" } else { "False" });
                }
                let sep = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                f.write_str("(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Exists(v, s, body) => write!(f, "(exists {v}:{s}. {body})"),
            Formula::Forall(v, s, body) => write!(f, "(forall {v}:{s}. {body})"),
        }
    }
}
