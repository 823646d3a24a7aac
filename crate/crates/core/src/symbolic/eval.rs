//! Evaluation of quantifier-free formulas and terms under an environment.
//!
//! Arithmetic is exact; an irrational square root falls back to `f64` and
//! marks the result as inexact. A square root of a negative number or a
//! division by zero yields `Undefined`, which makes every enclosing atom false.

use std::collections::BTreeMap;

use num::{Signed, ToPrimitive, Zero};

use super::formula::{Cmp, Formula};
use super::term::{exact_sqrt, rational_to_f64, Rational, Sort, Term};
use super::SymbolicError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Real(Rational),
    Bool(bool),
    Unit,
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Real(_) => Sort::Real,
            Value::Bool(_) => Sort::Bool,
            Value::Unit => Sort::Unit,
        }
    }

    pub fn default_for(sort: Sort) -> Value {
        match sort {
            Sort::Real => Value::Real(Rational::zero()),
            Sort::Bool => Value::Bool(false),
            Sort::Unit => Value::Unit,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Real(r) => f.write_str(&super::term::format_rational(r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => f.write_str("()"),
        }
    }
}

pub type Env = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Exact(Rational),
    Approx(f64),
    Undefined,
}

impl Num {
    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => rational_to_f64(r),
            Num::Approx(x) => *x,
            Num::Undefined => f64::NAN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub value: bool,
    /// Some atom had an undefined side.
    pub undefined: bool,
    /// Some comparison involved an irrational value.
    pub inexact: bool,
}

const APPROX_TOLERANCE: f64 = 1e-12;

fn approx(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| rational_to_f64(r))
}

fn binary(
    a: Num,
    b: Num,
    exact: impl Fn(Rational, Rational) -> Option<Rational>,
    float: impl Fn(f64, f64) -> f64,
) -> Num {
    match (a, b) {
        (Num::Undefined, _) | (_, Num::Undefined) => Num::Undefined,
        (Num::Exact(x), Num::Exact(y)) => match exact(x, y) {
            Some(r) => Num::Exact(r),
            None => Num::Undefined,
        },
        (x, y) => {
            let v = float(x.to_f64(), y.to_f64());
            if v.is_finite() {
                Num::Approx(v)
            } else {
                Num::Undefined
            }
        }
    }
}

pub fn eval_term(t: &Term, env: &Env) -> Result<Num, SymbolicError> {
    Ok(match t {
        Term::Var(name, _) => match env.get(name) {
            Some(Value::Real(r)) => Num::Exact(r.clone()),
            Some(other) => {
                return Err(SymbolicError::SortMismatch {
                    var: name.clone(),
                    expected: Sort::Real,
                    found: other.sort(),
                })
            }
            None => return Err(SymbolicError::UnboundVariable(name.clone())),
        },
        Term::Const(c) => Num::Exact(c.clone()),
        Term::Add(a, b) => binary(eval_term(a, env)?, eval_term(b, env)?, |x, y| Some(x + y), |x, y| x + y),
        Term::Sub(a, b) => binary(eval_term(a, env)?, eval_term(b, env)?, |x, y| Some(x - y), |x, y| x - y),
        Term::Mul(a, b) => binary(eval_term(a, env)?, eval_term(b, env)?, |x, y| Some(x * y), |x, y| x * y),
        Term::Div(a, b) => binary(
            eval_term(a, env)?,
            eval_term(b, env)?,
            |x, y| if y.is_zero() { None } else { Some(x / y) },
            |x, y| if y == 0.0 { f64::NAN } else { x / y },
        ),
        Term::Neg(a) => match eval_term(a, env)? {
            Num::Exact(x) => Num::Exact(-x),
            Num::Approx(x) => Num::Approx(-x),
            Num::Undefined => Num::Undefined,
        },
        Term::Sqrt(a) => match eval_term(a, env)? {
            Num::Exact(x) if x.is_negative() => Num::Undefined,
            Num::Exact(x) => match exact_sqrt(&x) {
                Some(r) => Num::Exact(r),
                None => Num::Approx(approx(&x).sqrt()),
            },
            Num::Approx(x) if x < 0.0 => Num::Undefined,
            Num::Approx(x) => Num::Approx(x.sqrt()),
            Num::Undefined => Num::Undefined,
        },
    })
}

fn compare(cmp: Cmp, a: &Num, b: &Num) -> (bool, bool) {
    match (a, b) {
        (Num::Exact(x), Num::Exact(y)) => (
            match cmp {
                Cmp::Lt => x < y,
                Cmp::Le => x <= y,
                Cmp::Eq => x == y,
                Cmp::Ne => x != y,
            },
            false,
        ),
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            let tol = APPROX_TOLERANCE * x.abs().max(y.abs()).max(1.0);
            let close = (x - y).abs() <= tol;
            (
                match cmp {
                    Cmp::Lt => x < y && !close,
                    Cmp::Le => x < y || close,
                    Cmp::Eq => close,
                    Cmp::Ne => !close,
                },
                true,
            )
        }
    }
}

fn lookup_bool(t: &Term, env: &Env) -> Result<bool, SymbolicError> {
    match t {
        Term::Var(name, _) => match env.get(name) {
            Some(Value::Bool(b)) => Ok(*b),
            Some(other) => {
                Err(SymbolicError::SortMismatch { var: name.clone(), expected: Sort::Bool, found: other.sort() })
            }
            None => Err(SymbolicError::UnboundVariable(name.clone())),
        },
        _ => Err(SymbolicError::SortMismatch { var: t.to_string(), expected: Sort::Bool, found: t.sort() }),
    }
}

pub fn eval_formula(f: &Formula, env: &Env) -> Result<Evaluation, SymbolicError> {
    let mut ev = Evaluation { value: false, undefined: false, inexact: false };
    ev.value = eval_inner(f, env, &mut ev)?;
    Ok(ev)
}

fn eval_inner(f: &Formula, env: &Env, ev: &mut Evaluation) -> Result<bool, SymbolicError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(cmp, a, b) => match (a.sort(), b.sort()) {
            (Sort::Unit, _) | (_, Sort::Unit) => matches!(cmp, Cmp::Eq | Cmp::Le),
            (Sort::Bool, _) | (_, Sort::Bool) => {
                let (x, y) = (lookup_bool(a, env)?, lookup_bool(b, env)?);
                match cmp {
                    Cmp::Eq | Cmp::Le => x == y,
                    Cmp::Ne | Cmp::Lt => x != y,
                }
            }
            _ => {
                let (x, y) = (eval_term(a, env)?, eval_term(b, env)?);
                if x == Num::Undefined || y == Num::Undefined {
                    ev.undefined = true;
                    false
                } else {
                    let (holds, inexact) = compare(*cmp, &x, &y);
                    ev.inexact |= inexact;
                    holds
                }
            }
        },
        Formula::BoolVar(name) => match env.get(name) {
            Some(Value::Bool(b)) => *b,
            Some(other) => {
                return Err(SymbolicError::SortMismatch {
                    var: name.clone(),
                    expected: Sort::Bool,
                    found: other.sort(),
                })
            }
            None => return Err(SymbolicError::UnboundVariable(name.clone())),
        },
        Formula::Not(a) => !eval_inner(a, env, ev)?,
        Formula::And(ps) => {
            let mut all = true;
            for p in ps {
                all &= eval_inner(p, env, ev)?;
            }
            all
        }
        Formula::Or(ps) => {
            let mut any = false;
            for p in ps {
                any |= eval_inner(p, env, ev)?;
            }
            any
        }
        Formula::Implies(a, b) => {
            let a = eval_inner(a, env, ev)?;
            let b = eval_inner(b, env, ev)?;
            !a || b
        }
        Formula::Exists(..) | Formula::Forall(..) => return Err(SymbolicError::QuantifiedInput),
    })
}

/// Floating-point evaluation used by the simulator. Undefined results are NaN.
pub fn eval_term_f64(t: &Term, env: &BTreeMap<String, f64>) -> Result<f64, SymbolicError> {
    Ok(match t {
        Term::Var(name, _) => *env.get(name).ok_or_else(|| SymbolicError::UnboundVariable(name.clone()))?,
        Term::Const(c) => rational_to_f64(c),
        Term::Add(a, b) => eval_term_f64(a, env)? + eval_term_f64(b, env)?,
        Term::Sub(a, b) => eval_term_f64(a, env)? - eval_term_f64(b, env)?,
        Term::Mul(a, b) => eval_term_f64(a, env)? * eval_term_f64(b, env)?,
        Term::Div(a, b) => {
            let d = eval_term_f64(b, env)?;
            if d == 0.0 {
                f64::NAN
            } else {
                eval_term_f64(a, env)? / d
            }
        }
        Term::Neg(a) => -eval_term_f64(a, env)?,
        Term::Sqrt(a) => {
            let v = eval_term_f64(a, env)?;
            if v < 0.0 {
                f64::NAN
            } else {
                v.sqrt()
            }
        }
    })
}

/// Floating-point evaluation in which values closer than `tol` count as
/// equal, so `x < y` needs a margin and stays the negation of `y <= x`.
/// Booleans are encoded as 0.0/1.0.
pub fn eval_formula_f64(f: &Formula, env: &BTreeMap<String, f64>, tol: f64) -> Result<bool, SymbolicError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(cmp, a, b) => {
            if a.sort() == Sort::Unit || b.sort() == Sort::Unit {
                return Ok(matches!(cmp, Cmp::Eq | Cmp::Le));
            }
            let (x, y) = (eval_term_f64(a, env)?, eval_term_f64(b, env)?);
            if x.is_nan() || y.is_nan() {
                false
            } else {
                match cmp {
                    Cmp::Lt => x < y - tol,
                    Cmp::Le => x <= y + tol,
                    Cmp::Eq => (x - y).abs() <= tol,
                    Cmp::Ne => (x - y).abs() > tol,
                }
            }
        }
        Formula::BoolVar(name) => *env.get(name).ok_or_else(|| SymbolicError::UnboundVariable(name.clone()))? != 0.0,
        Formula::Not(a) => !eval_formula_f64(a, env, tol)?,
        Formula::And(ps) => {
            for p in ps {
                if !eval_formula_f64(p, env, tol)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(ps) => {
            for p in ps {
                if eval_formula_f64(p, env, tol)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(a, b) => !eval_formula_f64(a, env, tol)? || eval_formula_f64(b, env, tol)?,
        Formula::Exists(..) | Formula::Forall(..) => return Err(SymbolicError::QuantifiedInput),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs.iter().map(|(k, v)| (k.to_string(), Value::Real(Rational::from_integer((*v).into())))).collect()
    }

    #[test]
    fn evaluates_sum() {
        let f = Formula::eq(Term::var("z"), Term::var("x") + Term::var("y"));
        let e = eval_formula(&f, &env(&[("x", 1), ("y", 2), ("z", 3)])).unwrap();
        assert!(e.value && !e.undefined && !e.inexact);
    }

    #[test]
    fn sqrt_domain() {
        let f = Formula::ge(Term::sqrt(Term::var("x")), Term::int(0));
        assert!(eval_formula(&f, &env(&[("x", 4)])).unwrap().value);
        let g = Formula::eq(Term::var("y"), Term::sqrt(Term::var("x")));
        let e = eval_formula(&g, &env(&[("x", -1), ("y", 0)])).unwrap();
        assert!(!e.value && e.undefined);
        let n = eval_formula(&Formula::not(g), &env(&[("x", -1), ("y", 0)])).unwrap();
        assert!(n.value);
    }

    #[test]
    fn irrational_is_flagged() {
        let g = Formula::lt(Term::var("y"), Term::sqrt(Term::var("x")));
        let e = eval_formula(&g, &env(&[("x", 2), ("y", 1)])).unwrap();
        assert!(e.value && e.inexact);
    }

    #[test]
    fn errors() {
        let f = Formula::le(Term::var("q"), Term::int(0));
        assert_eq!(eval_formula(&f, &Env::new()), Err(SymbolicError::UnboundVariable("q".into())));
        let g = Formula::exists("q", Sort::Real, f);
        assert_eq!(eval_formula(&g, &Env::new()), Err(SymbolicError::QuantifiedInput));
    }
}
