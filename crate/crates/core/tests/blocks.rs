mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcrskit::blocks::{instantiate, BlockError, BlockSpec, BLOCK_TYPES};
use rcrskit::symbolic::eval::{eval_formula_f64, eval_term_f64};
use rcrskit::symbolic::parse_rational;

use common::interp::{arity, block_next, block_outputs};

const TOL: f64 = 1e-9;

fn spec(ty: &str, params: &[(&str, &str)]) -> BlockSpec {
    params.iter().fold(BlockSpec::new(ty), |b, (k, v)| b.with_number(k, parse_rational(v).unwrap()))
}

fn deterministic() -> Vec<BlockSpec> {
    vec![
        spec("Id", &[]),
        spec("Skip", &[]),
        spec("Constant", &[("c", "-7/3")]),
        spec("Add", &[]),
        spec("Sub", &[]),
        spec("Product", &[]),
        spec("Gain", &[("k", "5/4")]),
        spec("Split", &[]),
        spec("Split", &[("n", "4")]),
        spec("UnitDelay", &[]),
        spec("Integrator", &[("dt", "1/20")]),
        spec("SqrRoot", &[]),
    ]
}

#[test]
fn fundefs_agree_with_reference_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in deterministic() {
        let c = instantiate(&s).unwrap();
        let terms = c.fundefs().unwrap_or_else(|| panic!("{} has no output terms", s.type_name));
        let names = c.input_names();
        for _ in 0..100 {
            let mut env = BTreeMap::new();
            let mut xs = Vec::new();
            for n in &names {
                let x = if s.type_name == "SqrRoot" { rng.gen_range(0.0..50.0) } else { rng.gen_range(-50.0..50.0) };
                env.insert(n.clone(), x);
                xs.push(x);
            }
            let got: Vec<f64> = terms.iter().map(|t| eval_term_f64(t, &env).unwrap()).collect();
            let want = if s.is_stateful() {
                vec![xs[1], block_next(&s, xs[0], xs[1])]
            } else {
                block_outputs(&s, &xs[names.len() - arity(&s)..]).unwrap()
            };
            assert_eq!(got.len(), want.len(), "{}", s.type_name);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= TOL * w.abs().max(1.0), "{}: {g} vs {w} at {xs:?}", s.type_name);
            }
            assert!(eval_formula_f64(c.pre(), &env, TOL).unwrap());
        }
    }
}

#[test]
fn saturation_relation_is_the_clamp() {
    let c = instantiate(&spec("Saturation", &[("lo", "-2"), ("hi", "3/2")])).unwrap();
    assert!(c.fundefs().is_none());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reference = spec("Saturation", &[("lo", "-2"), ("hi", "3/2")]);
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-5.0..5.0);
        let y = block_outputs(&reference, &[x]).unwrap()[0];
        let env = |y: f64| BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]);
        assert!(eval_formula_f64(c.rel(), &env(y), TOL).unwrap(), "x = {x}");
        assert!(!eval_formula_f64(c.rel(), &env(y + 0.25), TOL).unwrap(), "x = {x}");
    }
}

#[test]
fn square_root_variants() {
    let at = |x: f64, y: f64| BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]);
    let sqrt = instantiate(&spec("SqrRoot", &[])).unwrap();
    assert!(!eval_formula_f64(sqrt.pre(), &at(-1.0, 0.0), TOL).unwrap());

    let nondet = instantiate(&spec("NonDetSqrt", &[])).unwrap();
    assert!(nondet.fundefs().is_none());
    assert!(eval_formula_f64(nondet.rel(), &at(4.0, 7.0), TOL).unwrap());
    assert!(!eval_formula_f64(nondet.rel(), &at(4.0, -1.0), TOL).unwrap());

    let receptive = instantiate(&spec("ReceptiveSqrt", &[])).unwrap();
    assert!(eval_formula_f64(receptive.pre(), &at(-4.0, 0.0), TOL).unwrap());
    assert!(eval_formula_f64(receptive.rel(), &at(-4.0, 123.0), TOL).unwrap());
    assert!(eval_formula_f64(receptive.rel(), &at(9.0, 3.0), TOL).unwrap());
    assert!(!eval_formula_f64(receptive.rel(), &at(9.0, -3.0), TOL).unwrap());
}

#[test]
fn every_listed_type_instantiates() {
    let params: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::from([
        ("Constant", vec![("c", "1")]),
        ("Gain", vec![("k", "2")]),
        ("Integrator", vec![("dt", "1")]),
        ("Saturation", vec![("lo", "0"), ("hi", "1")]),
    ]);
    for ty in BLOCK_TYPES {
        let s = spec(ty, params.get(ty).map(Vec::as_slice).unwrap_or(&[]));
        let c = instantiate(&s).unwrap_or_else(|e| panic!("{ty}: {e}"));
        let sig = s.signature().unwrap();
        let states = usize::from(s.is_stateful());
        assert_eq!(sig.states.len(), states, "{ty}");
        assert_eq!(sig.outputs.len() + states, c.outputs().len(), "{ty}");
    }
}

#[test]
fn parameter_errors() {
    assert!(matches!(instantiate(&BlockSpec::new("Lookup")), Err(BlockError::UnknownBlockType(_))));
    assert!(matches!(instantiate(&BlockSpec::new("Gain")), Err(BlockError::MissingParameter { .. })));
    assert!(matches!(
        instantiate(&spec("Saturation", &[("lo", "2"), ("hi", "1")])),
        Err(BlockError::InvalidParameter { .. })
    ));
    assert!(matches!(instantiate(&spec("Split", &[("n", "1")])), Err(BlockError::InvalidParameter { .. })));
}
