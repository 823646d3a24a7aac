mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcrskit::symbolic::simplify::contextual;
use rcrskit::symbolic::{check_sat, eliminate_quantifiers, simplify, Formula, Rational, SatResult, Term, Value};

use common::oracle::{eval_qf, random_point, random_quantified, Quantified, BOUND};

fn quantified(seed: u64) -> (Quantified, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_quantified(&mut rng), rng)
}

/// The quantifier-free body, with `y` free.
fn body(q: &Quantified) -> Formula {
    match q.to_formula() {
        Formula::Exists(_, _, b) | Formula::Forall(_, _, b) => *b,
        other => other,
    }
}

fn env(names: &[String], xs: &[Rational]) -> BTreeMap<String, Rational> {
    names.iter().cloned().zip(xs.iter().cloned()).collect()
}

fn all_names(q: &Quantified) -> Vec<String> {
    let mut names = q.free.clone();
    names.push(BOUND.to_string());
    names
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn elimination_agrees_with_brute_force(seed in any::<u64>()) {
        let (q, mut rng) = quantified(seed);
        let qf = eliminate_quantifiers(&q.to_formula()).unwrap();
        prop_assert!(qf.is_quantifier_free());
        for _ in 0..25 {
            let xs = random_point(&mut rng, q.free.len());
            prop_assert_eq!(eval_qf(&qf, &env(&q.free, &xs)), q.truth(&xs), "{} at {:?}", qf, xs);
        }
    }

    #[test]
    fn simplification_is_idempotent_and_sound(seed in any::<u64>()) {
        let (q, mut rng) = quantified(seed);
        let f = body(&q);
        let s = simplify(&f);
        prop_assert_eq!(simplify(&s), s.clone());
        let c = contextual(&f);
        let names = all_names(&q);
        for _ in 0..25 {
            let e = env(&names, &random_point(&mut rng, names.len()));
            let want = eval_qf(&f, &e);
            prop_assert_eq!(eval_qf(&s, &e), want);
            prop_assert_eq!(eval_qf(&c, &e), want);
        }
    }

    #[test]
    fn substitution_commutes_with_evaluation(seed in any::<u64>(), a in -3i64..=3, b in -4i64..=4) {
        let (q, mut rng) = quantified(seed);
        let f = body(&q);
        let x0 = q.free[0].clone();
        let t = Term::int(a) * Term::var(x0.as_str()) + Term::int(b);
        let g = f.substitute(&BTreeMap::from([(BOUND.to_string(), t)])).unwrap();
        let names = all_names(&q);
        for _ in 0..25 {
            let mut e = env(&names, &random_point(&mut rng, names.len()));
            let y = Rational::from_integer(a.into()) * &e[&x0] + Rational::from_integer(b.into());
            let lhs = eval_qf(&g, &e);
            e.insert(BOUND.to_string(), y);
            prop_assert_eq!(lhs, eval_qf(&f, &e));
        }
    }

    #[test]
    fn satisfiability_models_are_genuine(seed in any::<u64>()) {
        let (q, mut rng) = quantified(seed);
        let f = body(&q);
        let names = all_names(&q);
        match check_sat(&f) {
            SatResult::Sat(model) => {
                let e = model.iter().filter_map(|(k, v)| match v {
                    Value::Real(r) => Some((k.clone(), r.clone())),
                    _ => None,
                }).collect::<BTreeMap<_, _>>();
                prop_assert!(eval_qf(&f, &e), "{} at {:?}", f, e);
            }
            SatResult::Unsat => {
                for _ in 0..200 {
                    let e = env(&names, &random_point(&mut rng, names.len()));
                    prop_assert!(!eval_qf(&f, &e));
                }
            }
            SatResult::Unknown => prop_assert!(false, "linear formula left undecided: {}", f),
        }
    }
}
