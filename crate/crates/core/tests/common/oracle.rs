//! Random single-quantifier linear formulas and a brute-force evaluator.
//!
//! Truth of a linear formula in the bound variable `y` can only change at
//! the roots of its atoms, so checking every root, every midpoint and one
//! point beyond each end decides the quantifier exactly.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rcrskit::symbolic::{Cmp, Formula, Rational, Sort, Term};

pub const BOUND: &str = "y";

#[derive(Clone, Debug)]
pub enum Lf {
    /// `sum(coef[i] * var[i]) + c  cmp  0`; the last coefficient is `y`'s.
    Atom {
        coef: Vec<i64>,
        c: i64,
        cmp: Cmp,
    },
    And(Vec<Lf>),
    Or(Vec<Lf>),
    Not(Box<Lf>),
}

#[derive(Clone, Debug)]
pub struct Quantified {
    pub forall: bool,
    /// Free variable names; `y` is the bound one.
    pub free: Vec<String>,
    pub body: Lf,
}

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn random_atom(rng: &mut ChaCha8Rng, vars: usize) -> Lf {
    let mut coef: Vec<i64> = (0..vars).map(|_| if rng.gen_bool(0.6) { rng.gen_range(-3..=3) } else { 0 }).collect();
    if rng.gen_bool(0.8) {
        let y = vars - 1;
        while coef[y] == 0 {
            coef[y] = rng.gen_range(-3..=3);
        }
    }
    let cmp = match rng.gen_range(0..10) {
        0..=3 => Cmp::Le,
        4..=6 => Cmp::Lt,
        7..=8 => Cmp::Eq,
        _ => Cmp::Ne,
    };
    Lf::Atom { coef, c: rng.gen_range(-6..=6), cmp }
}

fn random_body(rng: &mut ChaCha8Rng, vars: usize, depth: usize) -> Lf {
    if depth == 0 || rng.gen_bool(0.3) {
        return random_atom(rng, vars);
    }
    match rng.gen_range(0..5) {
        0 => Lf::Not(Box::new(random_body(rng, vars, depth - 1))),
        1 | 2 => Lf::And((0..rng.gen_range(2..=3)).map(|_| random_body(rng, vars, depth - 1)).collect()),
        _ => Lf::Or((0..rng.gen_range(2..=3)).map(|_| random_body(rng, vars, depth - 1)).collect()),
    }
}

pub fn random_quantified(rng: &mut ChaCha8Rng) -> Quantified {
    let nfree = rng.gen_range(1..=2);
    let free: Vec<String> = (0..nfree).map(|i| format!("x{i}")).collect();
    Quantified { forall: rng.gen_bool(0.4), free, body: random_body(rng, nfree + 1, 3) }
}

impl Quantified {
    fn names(&self) -> Vec<String> {
        let mut v = self.free.clone();
        v.push(BOUND.to_string());
        v
    }

    pub fn to_formula(&self) -> Formula {
        let body = lf_formula(&self.body, &self.names());
        if self.forall {
            Formula::forall(BOUND, Sort::Real, body)
        } else {
            Formula::exists(BOUND, Sort::Real, body)
        }
    }

    /// Exact truth value at the free-variable point `xs`.
    pub fn truth(&self, xs: &[Rational]) -> bool {
        let mut roots = Vec::new();
        collect_roots(&self.body, xs, &mut roots);
        roots.sort();
        roots.dedup();
        let mut candidates = Vec::new();
        match (roots.first(), roots.last()) {
            (Some(lo), Some(hi)) => {
                candidates.push(lo - q(1));
                candidates.push(hi + q(1));
            }
            _ => candidates.push(q(0)),
        }
        for w in roots.windows(2) {
            candidates.push((&w[0] + &w[1]) / q(2));
        }
        candidates.extend(roots);
        let at = |y: &Rational| {
            let mut point = xs.to_vec();
            point.push(y.clone());
            lf_eval(&self.body, &point)
        };
        if self.forall {
            candidates.iter().all(at)
        } else {
            candidates.iter().any(at)
        }
    }
}

fn lf_formula(f: &Lf, names: &[String]) -> Formula {
    match f {
        Lf::Atom { coef, c, cmp } => {
            let mut t = Term::int(*c);
            for (a, n) in coef.iter().zip(names) {
                if *a != 0 {
                    t = t + Term::int(*a) * Term::var(n.as_str());
                }
            }
            Formula::atom(*cmp, t, Term::int(0))
        }
        Lf::And(ps) => Formula::and(ps.iter().map(|p| lf_formula(p, names)).collect()),
        Lf::Or(ps) => Formula::or(ps.iter().map(|p| lf_formula(p, names)).collect()),
        Lf::Not(p) => Formula::not(lf_formula(p, names)),
    }
}

fn compare(cmp: Cmp, v: &Rational) -> bool {
    match cmp {
        Cmp::Lt => v.is_negative(),
        Cmp::Le => !v.is_positive(),
        Cmp::Eq => v.is_zero(),
        Cmp::Ne => !v.is_zero(),
    }
}

fn lf_eval(f: &Lf, point: &[Rational]) -> bool {
    match f {
        Lf::Atom { coef, c, cmp } => {
            let v = coef.iter().zip(point).fold(q(*c), |acc, (a, x)| acc + q(*a) * x);
            compare(*cmp, &v)
        }
        Lf::And(ps) => ps.iter().all(|p| lf_eval(p, point)),
        Lf::Or(ps) => ps.iter().any(|p| lf_eval(p, point)),
        Lf::Not(p) => !lf_eval(p, point),
    }
}

fn collect_roots(f: &Lf, xs: &[Rational], out: &mut Vec<Rational>) {
    match f {
        Lf::Atom { coef, c, .. } => {
            let a = *coef.last().unwrap();
            if a != 0 {
                let rest = coef.iter().zip(xs).fold(q(*c), |acc, (k, x)| acc + q(*k) * x);
                out.push(-rest / q(a));
            }
        }
        Lf::And(ps) | Lf::Or(ps) => ps.iter().for_each(|p| collect_roots(p, xs, out)),
        Lf::Not(p) => collect_roots(p, xs, out),
    }
}

fn term_value(t: &Term, env: &BTreeMap<String, Rational>) -> Rational {
    match t {
        Term::Var(n, _) => env.get(n).cloned().unwrap_or_else(|| panic!("unbound {n}")),
        Term::Const(c) => c.clone(),
        Term::Add(a, b) => term_value(a, env) + term_value(b, env),
        Term::Sub(a, b) => term_value(a, env) - term_value(b, env),
        Term::Mul(a, b) => term_value(a, env) * term_value(b, env),
        Term::Div(a, b) => term_value(a, env) / term_value(b, env),
        Term::Neg(a) => -term_value(a, env),
        Term::Sqrt(_) => panic!("linear formulas only"),
    }
}

/// Exact evaluation of a quantifier-free linear formula.
pub fn eval_qf(f: &Formula, env: &BTreeMap<String, Rational>) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(cmp, a, b) => compare(*cmp, &(term_value(a, env) - term_value(b, env))),
        Formula::Not(p) => !eval_qf(p, env),
        Formula::And(ps) => ps.iter().all(|p| eval_qf(p, env)),
        Formula::Or(ps) => ps.iter().any(|p| eval_qf(p, env)),
        Formula::Implies(a, b) => !eval_qf(a, env) || eval_qf(b, env),
        other => panic!("not quantifier-free linear: {other}"),
    }
}

/// A sample point with small rationals, biased towards integers so that
/// boundaries are hit.
pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| {
            let den = [1, 1, 2, 3, 4][rng.gen_range(0..5)];
            Rational::new(rng.gen_range(-12 * den..=12 * den).into(), i64::from(den).into())
        })
        .collect()
}
