//! Linear forms over "atoms" (variables and opaque nonlinear subterms).
//!
//! Every term linearizes: nonlinear subterms such as `sqrt(x)` or `x*y`
//! become opaque keys, canonicalized so that syntactically different but
//! arithmetically identical occurrences coincide.

use std::collections::BTreeMap;

use num::{BigInt, Integer, One, Signed, Zero};

use super::formula::{Cmp, Formula};
use super::term::{exact_sqrt, Rational, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Term, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr { coeffs: BTreeMap::new(), constant: Rational::zero() }
    }

    pub fn constant(c: Rational) -> LinExpr {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn key(t: Term) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(t, Rational::one());
        LinExpr { coeffs, constant: Rational::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, key: &Term) -> Rational {
        self.coeffs.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::one());
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        out
    }

    pub fn add_scaled(&mut self, other: &LinExpr, factor: &Rational) {
        for (k, c) in &other.coeffs {
            let entry = self.coeffs.entry(k.clone()).or_insert_with(Rational::zero);
            *entry += c * factor;
            if entry.is_zero() {
                self.coeffs.remove(k);
            }
        }
        self.constant += &other.constant * factor;
    }

    pub fn scale(&self, factor: &Rational) -> LinExpr {
        if factor.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(k, c)| (k.clone(), c * factor)).collect(),
            constant: &self.constant * factor,
        }
    }

    /// Replaces `key` by `value`.
    pub fn substitute_key(&self, key: &Term, value: &LinExpr) -> LinExpr {
        match self.coeffs.get(key) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                let mut out = self.clone();
                out.coeffs.remove(key);
                out.add_scaled(value, &c);
                out
            }
        }
    }

    /// Whether any opaque (non-variable) key mentions `name`.
    pub fn opaque_mentions(&self, name: &str) -> bool {
        self.coeffs.keys().any(|k| !matches!(k, Term::Var(..)) && k.mentions(name))
    }

    pub fn has_opaque(&self) -> bool {
        self.coeffs.keys().any(|k| !matches!(k, Term::Var(..)))
    }

    /// Rebuilds a term: keys in order, then the constant.
    pub fn to_term(&self) -> Term {
        let mut acc: Option<Term> = None;
        for (k, c) in &self.coeffs {
            let mag = c.abs();
            let piece = if mag.is_one() { k.clone() } else { Term::Const(mag) * k.clone() };
            acc = Some(match acc {
                None if c.is_negative() => -piece,
                None => piece,
                Some(a) if c.is_negative() => a - piece,
                Some(a) => a + piece,
            });
        }
        match acc {
            None => Term::Const(self.constant.clone()),
            Some(a) if self.constant.is_zero() => a,
            Some(a) if self.constant.is_negative() => a - Term::Const(-self.constant.clone()),
            Some(a) => a + Term::Const(self.constant.clone()),
        }
    }

    /// Scales by a positive factor so that all coefficients and the constant are
    /// coprime integers. Sign is preserved.
    pub fn normalized_positive(&self) -> LinExpr {
        let mut lcm = BigInt::one();
        for c in self.coeffs.values().chain(std::iter::once(&self.constant)) {
            lcm = lcm.lcm(c.denom());
        }
        let scaled = self.scale(&Rational::from_integer(lcm));
        let mut gcd = BigInt::zero();
        for c in scaled.coeffs.values().chain(std::iter::once(&scaled.constant)) {
            gcd = gcd.gcd(c.numer());
        }
        if gcd.is_zero() || gcd.is_one() {
            return scaled;
        }
        scaled.scale(&Rational::new(BigInt::one(), gcd))
    }
}

/// Linear form of a term with nonlinear subterms as opaque keys.
pub fn linearize(t: &Term) -> LinExpr {
    match t {
        Term::Var(..) => LinExpr::key(t.clone()),
        Term::Const(c) => LinExpr::constant(c.clone()),
        Term::Add(a, b) => linearize(a).add(&linearize(b)),
        Term::Sub(a, b) => linearize(a).sub(&linearize(b)),
        Term::Neg(a) => linearize(a).scale(&-Rational::one()),
        Term::Mul(a, b) => {
            let (la, lb) = (linearize(a), linearize(b));
            if la.is_constant() {
                lb.scale(&la.constant)
            } else if lb.is_constant() {
                la.scale(&lb.constant)
            } else {
                let (ca, cb) = (la.to_term(), lb.to_term());
                let key = if ca <= cb { ca * cb } else { cb * ca };
                LinExpr::key(key)
            }
        }
        Term::Div(a, b) => {
            let (la, lb) = (linearize(a), linearize(b));
            if lb.is_constant() && !lb.constant.is_zero() {
                la.scale(&lb.constant.recip())
            } else {
                LinExpr::key(la.to_term() / lb.to_term())
            }
        }
        Term::Sqrt(a) => {
            let la = linearize(a);
            if la.is_constant() {
                if let Some(r) = exact_sqrt(&la.constant) {
                    return LinExpr::constant(r);
                }
            }
            LinExpr::key(Term::sqrt(la.to_term()))
        }
    }
}

/// Canonical rendering of `expr cmp 0` as an atom with positive coefficients on
/// both sides, or `True`/`False` when the expression is constant.
pub fn canonical_atom(expr: &LinExpr, cmp: Cmp) -> Formula {
    if expr.is_constant() {
        let c = &expr.constant;
        let holds = match cmp {
            Cmp::Lt => c.is_negative(),
            Cmp::Le => !c.is_positive(),
            Cmp::Eq => c.is_zero(),
            Cmp::Ne => !c.is_zero(),
        };
        return if holds { Formula::True } else { Formula::False };
    }
    let mut e = expr.normalized_positive();
    if matches!(cmp, Cmp::Eq | Cmp::Ne) {
        if let Some((_, lead)) = e.coeffs.iter().next() {
            if lead.is_negative() {
                e = e.scale(&-Rational::one());
            }
        }
    }
    let mut pos = LinExpr::zero();
    let mut neg = LinExpr::zero();
    for (k, c) in &e.coeffs {
        if c.is_positive() {
            pos.coeffs.insert(k.clone(), c.clone());
        } else {
            neg.coeffs.insert(k.clone(), -c.clone());
        }
    }
    // pos - neg + c0 cmp 0
    let (lhs, rhs) = if pos.coeffs.is_empty() {
        (Term::Const(e.constant.clone()), neg.to_term())
    } else {
        neg.constant = -e.constant.clone();
        (pos.to_term(), neg.to_term())
    };
    Formula::Atom(cmp, lhs, rhs)
}
