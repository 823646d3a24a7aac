//! Arithmetic terms over exact rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, Zero};

/// Exact rational number used throughout the symbolic core.
pub type Rational = BigRational;

/// Sort of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Real,
    Bool,
    /// The one-element sort (input of source blocks such as `Constant`).
    Unit,
}

impl Sort {
    pub fn name(self) -> &'static str {
        match self {
            Sort::Real => "Real",
            Sort::Bool => "Bool",
            Sort::Unit => "Unit",
        }
    }

    pub fn parse(s: &str) -> Option<Sort> {
        match s {
            "Real" | "real" => Some(Sort::Real),
            "Bool" | "bool" => Some(Sort::Bool),
            "Unit" | "unit" => Some(Sort::Unit),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String, Sort),
    Const(Rational),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Sqrt(Box<Term>),
}

/// Parses `p/q`, `p` or a finite decimal such as `-0.25` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !int_digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac);
        let mut num: BigInt = digits.parse().ok()?;
        if negative {
            num = -num;
        }
        let den = num::pow(BigInt::from(10), frac.len());
        return Some(Rational::new(num, den));
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rational::from_integer(n))
}

/// Canonical text form of a rational: `p/q` or an integer.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact square root of a non-negative rational, if it is a perfect square.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into(), Sort::Real)
    }

    pub fn typed_var(name: impl Into<String>, sort: Sort) -> Term {
        Term::Var(name.into(), sort)
    }

    pub fn int(n: i64) -> Term {
        Term::Const(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(p: i64, q: i64) -> Term {
        Term::Const(Rational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn constant(r: Rational) -> Term {
        Term::Const(r)
    }

    pub fn sqrt(t: Term) -> Term {
        Term::Sqrt(Box::new(t))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(_, s) => *s,
            _ => Sort::Real,
        }
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(n, _) => {
                out.insert(n.clone());
            }
            Term::Const(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Term::Neg(a) | Term::Sqrt(a) => a.free_vars_into(out),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn var_sorts_into(&self, out: &mut BTreeMap<String, Sort>) {
        match self {
            Term::Var(n, s) => {
                out.entry(n.clone()).or_insert(*s);
            }
            Term::Const(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.var_sorts_into(out);
                b.var_sorts_into(out);
            }
            Term::Neg(a) | Term::Sqrt(a) => a.var_sorts_into(out),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Term::Var(n, _) => n == name,
            Term::Const(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.mentions(name) || b.mentions(name)
            }
            Term::Neg(a) | Term::Sqrt(a) => a.mentions(name),
        }
    }

    pub fn mentions_any(&self, names: &BTreeSet<String>) -> bool {
        match self {
            Term::Var(n, _) => names.contains(n),
            Term::Const(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.mentions_any(names) || b.mentions_any(names)
            }
            Term::Neg(a) | Term::Sqrt(a) => a.mentions_any(names),
        }
    }

    /// A term is total when it is defined everywhere: no square roots and no
    /// division by anything but a non-zero constant.
    pub fn is_total(&self) -> bool {
        match self {
            Term::Var(..) | Term::Const(_) => true,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => a.is_total() && b.is_total(),
            Term::Div(a, b) => a.is_total() && matches!(b.as_const(), Some(c) if !c.is_zero()),
            Term::Neg(a) => a.is_total(),
            Term::Sqrt(_) => false,
        }
    }

    /// True when the term contains `Sqrt` or a product/quotient of non-constants.
    pub fn is_nonlinear(&self) -> bool {
        match self {
            Term::Var(..) | Term::Const(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) => a.is_nonlinear() || b.is_nonlinear(),
            Term::Mul(a, b) => {
                a.is_nonlinear() || b.is_nonlinear() || (!a.free_vars().is_empty() && !b.free_vars().is_empty())
            }
            Term::Div(a, b) => a.is_nonlinear() || !b.free_vars().is_empty(),
            Term::Neg(a) => a.is_nonlinear(),
            Term::Sqrt(_) => true,
        }
    }

    /// Replaces variables by terms. Terms have no binders, so no capture can occur.
    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(n, _) => match binding.get(n) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            Term::Const(_) => self.clone(),
            Term::Add(a, b) => Term::Add(Box::new(a.substitute(binding)), Box::new(b.substitute(binding))),
            Term::Sub(a, b) => Term::Sub(Box::new(a.substitute(binding)), Box::new(b.substitute(binding))),
            Term::Mul(a, b) => Term::Mul(Box::new(a.substitute(binding)), Box::new(b.substitute(binding))),
            Term::Div(a, b) => Term::Div(Box::new(a.substitute(binding)), Box::new(b.substitute(binding))),
            Term::Neg(a) => Term::Neg(Box::new(a.substitute(binding))),
            Term::Sqrt(a) => Term::Sqrt(Box::new(a.substitute(binding))),
        }
    }

    /// Constant folding and neutral-element removal over exact rationals.
    pub fn fold(&self) -> Term {
        match self {
            Term::Var(..) | Term::Const(_) => self.clone(),
            Term::Add(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_const(), b.as_const()) {
                    (Some(x), Some(y)) => Term::Const(x + y),
                    (Some(x), None) if x.is_zero() => b,
                    (None, Some(y)) if y.is_zero() => a,
                    _ => Term::Add(Box::new(a), Box::new(b)),
                }
            }
            Term::Sub(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_const(), b.as_const()) {
                    (Some(x), Some(y)) => Term::Const(x - y),
                    (None, Some(y)) if y.is_zero() => a,
                    (Some(x), None) if x.is_zero() => Term::Neg(Box::new(b)).fold(),
                    _ if a == b && a.is_total() => Term::Const(Rational::zero()),
                    _ => Term::Sub(Box::new(a), Box::new(b)),
                }
            }
            Term::Mul(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_const(), b.as_const()) {
                    (Some(x), Some(y)) => Term::Const(x * y),
                    (Some(x), None) if x.is_one() => b,
                    (None, Some(y)) if y.is_one() => a,
                    (Some(x), None) if x.is_zero() && b.is_total() => Term::Const(Rational::zero()),
                    (None, Some(y)) if y.is_zero() && a.is_total() => Term::Const(Rational::zero()),
                    _ => Term::Mul(Box::new(a), Box::new(b)),
                }
            }
            Term::Div(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_const(), b.as_const()) {
                    (Some(x), Some(y)) if !y.is_zero() => Term::Const(x / y),
                    (None, Some(y)) if y.is_one() => a,
                    _ => Term::Div(Box::new(a), Box::new(b)),
                }
            }
            Term::Neg(a) => {
                let a = a.fold();
                match a {
                    Term::Const(x) => Term::Const(-x),
                    Term::Neg(inner) => *inner,
                    other => Term::Neg(Box::new(other)),
                }
            }
            Term::Sqrt(a) => {
                let a = a.fold();
                match a.as_const().and_then(exact_sqrt) {
                    Some(r) => Term::Const(r),
                    None => Term::Sqrt(Box::new(a)),
                }
            }
        }
    }

    /// Whether folding left a square root of a negative constant or a division
    /// by zero, i.e. the term is undefined everywhere.
    pub fn is_undefined_constant(&self) -> bool {
        match self {
            Term::Var(..) | Term::Const(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
                a.is_undefined_constant() || b.is_undefined_constant()
            }
            Term::Div(a, b) => {
                a.is_undefined_constant() || b.is_undefined_constant() || matches!(b.as_const(), Some(c) if c.is_zero())
            }
            Term::Neg(a) => a.is_undefined_constant(),
            Term::Sqrt(a) => a.is_undefined_constant() || matches!(a.as_const(), Some(c) if c.is_negative()),
        }
    }

    /// Arguments of every `Sqrt` and every non-constant denominator, outermost first.
    pub fn partiality_conditions(&self, sqrt_args: &mut Vec<Term>, denominators: &mut Vec<Term>) {
        match self {
            Term::Var(..) | Term::Const(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
                a.partiality_conditions(sqrt_args, denominators);
                b.partiality_conditions(sqrt_args, denominators);
            }
            Term::Div(a, b) => {
                if !matches!(b.as_const(), Some(c) if !c.is_zero()) {
                    denominators.push((**b).clone());
                }
                a.partiality_conditions(sqrt_args, denominators);
                b.partiality_conditions(sqrt_args, denominators);
            }
            Term::Neg(a) => a.partiality_conditions(sqrt_args, denominators),
            Term::Sqrt(a) => {
                sqrt_args.push((**a).clone());
                a.partiality_conditions(sqrt_args, denominators);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(..) | Term::Const(_) => 1,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => 1 + a.size() + b.size(),
            Term::Neg(a) | Term::Sqrt(a) => 1 + a.size(),
        }
    }

    fn is_compound(&self) -> bool {
        matches!(self, Term::Add(..) | Term::Sub(..) | Term::Mul(..) | Term::Div(..) | Term::Neg(..))
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let needs_parens = match self {
            Term::Const(c) => c.is_negative() || !c.is_integer(),
            t => t.is_compound(),
        };
        if needs_parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Term {
    /// Binary operators print without spaces; compound operands are parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n, _) => f.write_str(n),
            Term::Const(c) => f.write_str(&format_rational(c)),
            Term::Add(a, b) => {
                a.fmt_child(f)?;
                f.write_str("+")?;
                b.fmt_child(f)
            }
            Term::Sub(a, b) => {
                a.fmt_child(f)?;
                f.write_str("-")?;
                b.fmt_child(f)
            }
            Term::Mul(a, b) => {
                a.fmt_child(f)?;
                f.write_str("*")?;
                b.fmt_child(f)
            }
            Term::Div(a, b) => {
                a.fmt_child(f)?;
                f.write_str("/")?;
                b.fmt_child(f)
            }
            Term::Neg(a) => {
                f.write_str("-")?;
                a.fmt_child(f)
            }
            Term::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

impl ops::Add for Term {
    type Output = Term;
    fn add(self, rhs: Term) -> Term {
        Term::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Term {
    type Output = Term;
    fn sub(self, rhs: Term) -> Term {
        Term::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Term {
    type Output = Term;
    fn mul(self, rhs: Term) -> Term {
        Term::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for Term {
    type Output = Term;
    fn div(self, rhs: Term) -> Term {
        Term::Div(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Term {
    type Output = Term;
    fn neg(self) -> Term {
        Term::Neg(Box::new(self))
    }
}
