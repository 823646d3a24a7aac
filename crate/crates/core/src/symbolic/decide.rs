//! Satisfiability and validity for linear real arithmetic.
//!
//! Quantifiers are eliminated first; what remains is searched literal by
//! literal with Fourier–Motzkin pruning. Nonlinear subterms are abstracted as fresh
//! unknowns (square roots additionally as non-negative), which keeps `Unsat`
//! answers sound. A model found under abstraction is accepted only if it
//! re-evaluates exactly on the original formula.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;

use super::eval::{eval_formula, Env, Value};
use super::fm::{self, Constraint};
use super::formula::{fresh_var, Cmp, Formula};
use super::linear::{canonical_atom, linearize, LinExpr};
use super::qe::{eliminate_quantifiers_with_limit, negate_partial_atom, nnf, DEFAULT_ATOM_LIMIT};
use super::simplify::definedness;
use super::term::{Rational, Sort, Term};
use super::TriBool;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Satisfiability,
    Validity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// Satisfiable, with an assignment of every free variable.
    Sat(Env),
    Unsat,
    Unknown,
}

const MAX_LEAVES: usize = 50_000;

pub fn decide_linear(f: &Formula, mode: Mode) -> TriBool {
    match mode {
        Mode::Satisfiability => match check_sat(f) {
            SatResult::Sat(_) => TriBool::Yes,
            SatResult::Unsat => TriBool::No,
            SatResult::Unknown => TriBool::Unknown,
        },
        Mode::Validity => match check_sat(&Formula::not(f.clone())) {
            SatResult::Sat(_) => TriBool::No,
            SatResult::Unsat => TriBool::Yes,
            SatResult::Unknown => TriBool::Unknown,
        },
    }
}

pub fn check_sat(f: &Formula) -> SatResult {
    let sorts = f.free_var_sorts();
    let reduced = eliminate_quantifiers_with_limit(f, DEFAULT_ATOM_LIMIT).unwrap_or_else(|_| f.clone());
    let mut avoid: BTreeSet<String> = reduced.free_vars();
    let mut builder = Builder { avoid: &mut avoid, lits: Vec::new(), index: BTreeMap::new(), relaxed: false };
    let root = builder.node(&nnf(&reduced, true));
    let verify_target = if f.is_quantifier_free() { Some(f) } else { None };
    let mut search = Search {
        leaves: 0,
        unknown: false,
        sorts: &sorts,
        verify: verify_target,
        relaxed: builder.relaxed,
        lits: &builder.lits,
        assign: vec![None; builder.lits.len()],
        chosen: Vec::new(),
    };
    match search.run(&root) {
        Some(env) => SatResult::Sat(env),
        None if search.unknown => SatResult::Unknown,
        None => SatResult::Unsat,
    }
}

/// Negation normal form over numbered literals. Equal atoms share a number.
enum Node {
    Lit(usize),
    And(Vec<Node>),
    Or(Vec<Node>),
    /// A universally quantified residue: treated as `True` (over-approximation).
    Relaxed,
}

struct Builder<'a> {
    avoid: &'a mut BTreeSet<String>,
    lits: Vec<Formula>,
    index: BTreeMap<Formula, usize>,
    relaxed: bool,
}

impl Builder<'_> {
    fn literal(&mut self, f: &Formula) -> Node {
        let key = match f {
            Formula::Atom(cmp, a, b) if a.is_total() && b.is_total() => {
                match canonical_atom(&linearize(&(a.clone() - b.clone())), *cmp) {
                    Formula::True => return Node::And(Vec::new()),
                    Formula::False => return Node::Or(Vec::new()),
                    c => c,
                }
            }
            _ => f.clone(),
        };
        let next = self.lits.len();
        let i = *self.index.entry(key.clone()).or_insert(next);
        if i == next {
            self.lits.push(key);
        }
        Node::Lit(i)
    }

    fn relaxed(&mut self) -> Node {
        self.relaxed = true;
        Node::Relaxed
    }

    fn node(&mut self, f: &Formula) -> Node {
        match f {
            Formula::True => Node::And(Vec::new()),
            Formula::False => Node::Or(Vec::new()),
            Formula::And(ps) => Node::And(ps.iter().map(|p| self.node(p)).collect()),
            Formula::Or(ps) => Node::Or(ps.iter().map(|p| self.node(p)).collect()),
            Formula::Atom(cmp, a, b) if a.sort() == Sort::Bool || b.sort() == Sort::Bool => {
                match (a.as_var(), b.as_var()) {
                    (Some(p), Some(q)) => {
                        let (p, q) = (Formula::bool_var(p), Formula::bool_var(q));
                        let (np, nq) = (Formula::not(p.clone()), Formula::not(q.clone()));
                        let same = matches!(cmp, Cmp::Eq | Cmp::Le);
                        let alts = if same {
                            vec![Formula::and(vec![p, q]), Formula::and(vec![np, nq])]
                        } else {
                            vec![Formula::and(vec![p, nq]), Formula::and(vec![np, q])]
                        };
                        self.node(&Formula::Or(alts))
                    }
                    _ => self.relaxed(),
                }
            }
            Formula::Atom(cmp, a, b) if a.sort() == Sort::Unit || b.sort() == Sort::Unit => {
                if matches!(cmp, Cmp::Eq | Cmp::Le) {
                    Node::And(Vec::new())
                } else {
                    Node::Or(Vec::new())
                }
            }
            Formula::Atom(..) | Formula::BoolVar(_) => self.literal(f),
            Formula::Not(inner) => match &**inner {
                Formula::Atom(cmp, a, b) if a.sort() == Sort::Real && b.sort() == Sort::Real => {
                    self.node(&negate_partial_atom(*cmp, a, b))
                }
                Formula::BoolVar(_) => self.literal(f),
                other => self.node(&nnf(other, false)),
            },
            Formula::Implies(..) => self.node(&nnf(f, true)),
            Formula::Exists(v, s, body) => {
                let name = fresh_var(v, self.avoid);
                self.avoid.insert(name.clone());
                let mut m = BTreeMap::new();
                m.insert(v.clone(), Term::Var(name, *s));
                match body.substitute(&m) {
                    Ok(b) => self.node(&nnf(&b, true)),
                    Err(_) => self.relaxed(),
                }
            }
            Formula::Forall(..) => self.relaxed(),
        }
    }
}

/// Truth of a node when chosen literals hold and rejected ones do not;
/// `None` while it still depends on open literals.
fn value(n: &Node, assign: &[Option<bool>]) -> Option<bool> {
    match n {
        Node::Lit(i) => assign[*i],
        Node::Relaxed => Some(true),
        Node::And(ps) => {
            let mut open = false;
            for p in ps {
                match value(p, assign) {
                    Some(false) => return Some(false),
                    None => open = true,
                    Some(true) => {}
                }
            }
            if open {
                None
            } else {
                Some(true)
            }
        }
        Node::Or(ps) => {
            let mut open = false;
            for p in ps {
                match value(p, assign) {
                    Some(true) => return Some(true),
                    None => open = true,
                    Some(false) => {}
                }
            }
            if open {
                None
            } else {
                Some(false)
            }
        }
    }
}

/// First open literal reached through open nodes, left to right.
fn open_literal(n: &Node, assign: &[Option<bool>]) -> Option<usize> {
    match n {
        Node::Lit(i) => assign[*i].is_none().then_some(*i),
        Node::Relaxed => None,
        Node::And(ps) | Node::Or(ps) => {
            ps.iter().filter(|p| value(p, assign).is_none()).find_map(|p| open_literal(p, assign))
        }
    }
}

/// Branches on literals. The formula is in negation normal form, hence
/// monotone in its literals: a literal that is not chosen may be taken as
/// false, and only the chosen ones have to be consistent.
struct Search<'a> {
    leaves: usize,
    unknown: bool,
    sorts: &'a BTreeMap<String, Sort>,
    verify: Option<&'a Formula>,
    relaxed: bool,
    lits: &'a [Formula],
    assign: Vec<Option<bool>>,
    chosen: Vec<Formula>,
}

/// Linear constraints for a conjunction of literals, plus whether any
/// nonlinear subterm was abstracted.
fn constraints_of(lits: &[Formula]) -> Option<(Vec<Constraint>, BTreeMap<String, bool>, bool)> {
    let mut cs = Vec::new();
    let mut bools = BTreeMap::new();
    let mut abstracted = false;
    let mut queue: Vec<Formula> = lits.to_vec();
    let mut seen = BTreeSet::new();
    while let Some(l) = queue.pop() {
        if !seen.insert(l.clone()) {
            continue;
        }
        match &l {
            Formula::BoolVar(b) => {
                if bools.insert(b.clone(), true) == Some(false) {
                    return None;
                }
            }
            Formula::Not(inner) => {
                if let Formula::BoolVar(b) = &**inner {
                    if bools.insert(b.clone(), false) == Some(true) {
                        return None;
                    }
                }
            }
            Formula::Atom(cmp, a, b) => {
                if !(a.is_total() && b.is_total()) {
                    queue.extend(definedness(&[a, b]));
                }
                let e = linearize(&(a.clone() - b.clone()));
                for key in e.coeffs.keys() {
                    if !matches!(key, Term::Var(..)) {
                        abstracted = true;
                        if let Term::Sqrt(_) = key {
                            // -key <= 0
                            cs.push(Constraint::new(
                                LinExpr::key(key.clone()).scale(&-Rational::from_integer(1.into())),
                                Cmp::Le,
                            ));
                        }
                    }
                }
                cs.push(Constraint::new(e, *cmp));
            }
            _ => {}
        }
    }
    Some((cs, bools, abstracted))
}

impl Search<'_> {
    fn feasible(&self, lits: &[Formula]) -> bool {
        match constraints_of(lits) {
            None => false,
            Some((cs, _, _)) => !matches!(fm::solve(cs, DEFAULT_ATOM_LIMIT * 10), Ok(None)),
        }
    }

    fn run(&mut self, root: &Node) -> Option<Env> {
        self.leaves += 1;
        if self.leaves > MAX_LEAVES {
            self.unknown = true;
            return None;
        }
        match value(root, &self.assign) {
            Some(false) => None,
            Some(true) => {
                let chosen = std::mem::take(&mut self.chosen);
                let found = self.leaf(&chosen, self.relaxed);
                self.chosen = chosen;
                found
            }
            None => {
                let i = open_literal(root, &self.assign).expect("open formula has an open literal");
                self.assign[i] = Some(true);
                self.chosen.push(self.lits[i].clone());
                if self.feasible(&self.chosen) {
                    if let Some(env) = self.run(root) {
                        return Some(env);
                    }
                }
                self.chosen.pop();
                self.assign[i] = Some(false);
                let found = self.run(root);
                self.assign[i] = None;
                found
            }
        }
    }

    fn leaf(&mut self, lits: &[Formula], relaxed: bool) -> Option<Env> {
        self.leaves += 1;
        let (cs, bools, abstracted) = constraints_of(lits)?;
        let exact = !abstracted && !relaxed;
        let ne: Vec<usize> = cs.iter().enumerate().filter(|(_, c)| c.kind == Cmp::Ne).map(|(i, _)| i).collect();
        // Under abstraction a single model may fail to re-verify; each sign
        // choice for the disequalities gives another candidate.
        let variants = if exact || ne.len() > 6 { 0 } else { 1u32 << ne.len() };
        let mut feasible = false;
        for attempt in 0..=variants {
            let mut cs = cs.clone();
            if attempt > 0 {
                let mask = attempt - 1;
                for (bit, &i) in ne.iter().enumerate() {
                    let e = if mask & (1 << bit) == 0 {
                        cs[i].expr.clone()
                    } else {
                        cs[i].expr.scale(&-Rational::from_integer(1.into()))
                    };
                    cs[i] = Constraint::new(e, Cmp::Lt);
                }
            }
            let model = match fm::solve(cs, DEFAULT_ATOM_LIMIT * 10) {
                Ok(Some(m)) => m,
                Ok(None) if attempt == 0 => return None,
                Ok(None) => continue,
                Err(_) => {
                    self.unknown = true;
                    return None;
                }
            };
            feasible = true;
            let env = self.env_from(&model, &bools);
            if exact {
                return Some(env);
            }
            if let Some(f) = self.verify {
                if matches!(eval_formula(f, &env), Ok(ev) if ev.value && !ev.inexact) {
                    return Some(env);
                }
            }
        }
        if feasible {
            self.unknown = true;
        }
        None
    }

    fn env_from(&self, model: &fm::Model, bools: &BTreeMap<String, bool>) -> Env {
        let mut env = Env::new();
        for (name, sort) in self.sorts {
            let v = match sort {
                Sort::Real => Value::Real(model.get(&Term::var(name.clone())).cloned().unwrap_or_else(Rational::zero)),
                Sort::Bool => Value::Bool(bools.get(name).copied().unwrap_or(false)),
                Sort::Unit => Value::Unit,
            };
            env.insert(name.clone(), v);
        }
        env
    }
}
