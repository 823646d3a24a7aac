mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcrskit::component::Port;
use rcrskit::diagram::{flatten, Diagram, Source, Target};
use rcrskit::translator::{back_edges, make_router, translate, Strategy, TranslateError};

use common::{corpus, fixture, gen};

/// Unit-to-unit wires of the top level.
fn internal_wires(d: &Diagram) -> Vec<(String, String, usize)> {
    d.wires
        .iter()
        .enumerate()
        .filter_map(|(i, w)| match (&w.from, &w.to) {
            (Source::Port(a, _), Target::Port(b, _)) => Some((a.clone(), b.clone(), i)),
            _ => None,
        })
        .collect()
}

fn acyclic_without(d: &Diagram, removed: &BTreeSet<usize>) -> bool {
    let mut indeg: BTreeMap<String, usize> = d.units().iter().map(|u| (u.id().to_string(), 0)).collect();
    let edges: Vec<(String, String)> =
        internal_wires(d).into_iter().filter(|(_, _, i)| !removed.contains(i)).map(|(a, b, _)| (a, b)).collect();
    for (_, b) in &edges {
        *indeg.get_mut(b).unwrap() += 1;
    }
    let mut ready: Vec<String> = indeg.iter().filter(|(_, n)| **n == 0).map(|(k, _)| k.clone()).collect();
    let mut seen = 0;
    while let Some(u) = ready.pop() {
        seen += 1;
        for (a, b) in &edges {
            if *a == u {
                let n = indeg.get_mut(b).unwrap();
                *n -= 1;
                if *n == 0 {
                    ready.push(b.clone());
                }
            }
        }
    }
    seen == indeg.len()
}

fn flat_cases() -> Vec<(String, Diagram)> {
    let mut v: Vec<(String, Diagram)> = corpus().into_iter().map(|(n, d)| (n, flatten(&d))).collect();
    v.push(("large".into(), flatten(&gen::large_model().checked().unwrap())));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..40 {
        v.push((format!("random{i}"), gen::random_diagram(&mut rng, 12, i % 2 == 0).checked().unwrap()));
    }
    v
}

#[test]
fn back_edges_break_every_cycle() {
    for (name, d) in flat_cases() {
        let back = back_edges(&d);
        assert!(acyclic_without(&d, &back), "{name}");
        for &i in &back {
            let mut fewer = back.clone();
            fewer.remove(&i);
            assert!(!acyclic_without(&d, &fewer), "{name}: wire {i} is not needed");
        }
    }
}

#[test]
fn feedback_counts() {
    for (name, d) in flat_cases() {
        let ic = translate(&d, Strategy::Ic).unwrap();
        let fp = translate(&d, Strategy::Fp).unwrap();
        assert_eq!(ic.expr.feedback_count(), back_edges(&d).len(), "{name}");
        assert_eq!(fp.expr.feedback_count(), internal_wires(&d).len(), "{name}");
        assert_eq!(fp.expr.atoms().len(), d.blocks.len() + 2, "{name}");
    }
    let large = flatten(&gen::large_model().checked().unwrap());
    assert_eq!(translate(&large, Strategy::Ic).unwrap().expr.feedback_count(), gen::LARGE_LOOPS);
}

#[test]
fn external_signature() {
    let d = fixture("fibonacci");
    for s in Strategy::ALL {
        let t = translate(&d, s).unwrap();
        let ins: Vec<&str> = t.inputs.iter().map(|p| p.name.as_str()).collect();
        let outs: Vec<&str> = t.outputs.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(ins, ["si_1", "si_2"]);
        assert_eq!(outs, ["f", "so_1", "so_2"]);
        assert_eq!(t.states, 2);
        let n = t.normalize().unwrap().component;
        assert_eq!(n.input_names(), ins);
        assert_eq!(n.output_names(), outs);
    }
}

#[test]
fn summation_expressions() {
    let d = fixture("summation");
    assert_eq!(
        translate(&d, Strategy::Ic).unwrap().expr.to_string(),
        "feedback([- (w_3, g, si_1) ~> (w_3, g, si_1) -] o (add ** [- si_1 ~> si_1 -]) o delay o (split ** [- so_1 ~> so_1 -]))"
    );
    assert_eq!(
        translate(&d, Strategy::Fp).unwrap().expr.to_string(),
        "feedback(feedback(feedback([- (w_1, w_2, w_3, g, si_1) ~> (w_3, g, w_1, si_1, w_2) -] o (add ** delay ** split) \
         o [- (w_1, w_2, so_1, w_3, h) ~> (w_1, w_2, w_3, h, so_1) -])))"
    );
    for s in Strategy::ALL {
        let n = translate(&d, s).unwrap().normalize().unwrap();
        assert_eq!(n.component.to_string(), "[- (g, si_1) ~> (si_1, si_1+g) -]", "{s}");
    }
}

#[test]
fn hierarchy_translates_with_and_without_flattening() {
    let d = fixture("hierarchy");
    let nested = translate(&d, Strategy::Ic).unwrap();
    let flat = translate(&flatten(&d), Strategy::Ic).unwrap();
    assert_eq!(nested.expr.feedback_count(), 2);
    assert_eq!(flat.expr.feedback_count(), 2);
    let expected = "[- (a, b, si_1) ~> (si_1, b, (a+si_1)+(si_1*(1/2))) -]";
    assert_eq!(nested.normalize().unwrap().component.to_string(), expected);
    assert_eq!(translate(&d, Strategy::Fp).unwrap().normalize().unwrap().component.to_string(), expected);
}

#[test]
fn routers() {
    let ports: Vec<Port> = ["f", "g", "s"].iter().map(|n| Port::real(*n)).collect();
    let r = make_router(&ports, &["s".into(), "f".into()]).unwrap();
    assert_eq!(r.to_string(), "[- (f, g, s) ~> (s, f) -]");
    assert!(r.is_functional());
    assert_eq!(make_router(&ports, &["g".into(), "g".into()]), Err(TranslateError::DuplicationRequested("g".into())));
    assert_eq!(make_router(&ports, &["h".into()]), Err(TranslateError::UnknownVariable("h".into())));
}
