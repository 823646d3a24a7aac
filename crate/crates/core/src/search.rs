//! Deterministic counterexample search by sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symbolic::{eval_formula, eval_term, Env, Formula, Num, Rational, Sort, Term, Value};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const SAMPLE_BOUND: i64 = 100;

/// Variables computed from the sampled ones, in order (later definitions may
/// use earlier ones).
pub type Derivation = Vec<(String, Term)>;

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    const DENOMS: [i64; 5] = [1, 2, 3, 4, 10];
    let q = DENOMS[rng.gen_range(0..DENOMS.len())];
    let p = rng.gen_range(-SAMPLE_BOUND * q..=SAMPLE_BOUND * q);
    Rational::new(p.into(), q.into())
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// The `i`-th sample point: all zeros, then all lower and all upper
/// bounds, then a small-integer lattice phase, then random rationals in the
/// sampling box.
fn sample_point(i: usize, samples: usize, vars: &[(String, Sort)], rng: &mut ChaCha8Rng) -> Env {
    vars.iter()
        .map(|(n, s)| {
            let v = match s {
                Sort::Unit => Value::Unit,
                Sort::Bool => Value::Bool(if i < 3 { i == 2 } else { rng.gen_bool(0.5) }),
                Sort::Real => Value::Real(match i {
                    0 => int(0),
                    1 => int(-SAMPLE_BOUND),
                    2 => int(SAMPLE_BOUND),
                    _ if i < samples / 4 => int(rng.gen_range(-3..=3)),
                    _ => random_rational(rng),
                }),
            };
            (n.clone(), v)
        })
        .collect()
}

fn apply(env: &mut Env, derivation: &Derivation) -> bool {
    for (n, t) in derivation {
        match eval_term(t, env) {
            Ok(Num::Exact(r)) => {
                env.insert(n.clone(), Value::Real(r));
            }
            Ok(_) => return false,
            Err(_) => match t {
                Term::Var(src, Sort::Bool) => match env.get(src).cloned() {
                    Some(v) => {
                        env.insert(n.clone(), v);
                    }
                    None => return false,
                },
                _ => return false,
            },
        }
    }
    true
}

/// Searches for an assignment making `f` exactly true. Every free variable
/// is sampled; each derivation then overrides some of them with computed
/// values, yielding an additional candidate per sample point.
pub fn find_witness(f: &Formula, derivations: &[Derivation], samples: usize, seed: u64) -> Option<Env> {
    let vars: Vec<(String, Sort)> = f.free_var_sorts().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..samples.max(1) {
        let base = sample_point(i, samples, &vars, &mut rng);
        if holds(f, &base) {
            return Some(base);
        }
        for d in derivations {
            let mut env = base.clone();
            if apply(&mut env, d) && holds(f, &env) {
                return Some(env);
            }
        }
    }
    None
}

/// Exact truth: true, with no approximated comparison.
pub fn holds(f: &Formula, env: &Env) -> bool {
    matches!(eval_formula(f, env), Ok(ev) if ev.value && !ev.inexact)
}

/// Restricts an environment to the given names.
pub fn restrict(env: &Env, names: impl IntoIterator<Item = String>) -> BTreeMap<String, Value> {
    names.into_iter().filter_map(|n| env.get(&n).map(|v| (n, v.clone()))).collect()
}
