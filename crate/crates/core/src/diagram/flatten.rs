use std::collections::{BTreeMap, BTreeSet};

use crate::symbolic::fresh_var;

use super::{BlockInstance, Diagram, Source, Target, Wire};

struct Inlined {
    diagram: Diagram,
    ids: BTreeMap<String, String>,
}

/// Dissolves all subsystems into a single level. Inner blocks of subsystem
/// `S` become `S_<id>`; top-level blocks come first.
pub fn flatten(d: &Diagram) -> Diagram {
    if d.is_flat() {
        return d.clone();
    }
    let mut used: BTreeSet<String> = d.blocks.iter().map(|b| b.id.clone()).collect();
    let mut blocks = d.blocks.clone();
    let mut subs: BTreeMap<String, Inlined> = BTreeMap::new();
    for s in &d.subsystems {
        let inner = flatten(&s.diagram);
        let mut ids = BTreeMap::new();
        for b in &inner.blocks {
            let id = fresh_var(&format!("{}_{}", s.name, b.id), &used);
            used.insert(id.clone());
            ids.insert(b.id.clone(), id.clone());
            blocks.push(BlockInstance { id, spec: b.spec.clone(), init: b.init.clone() });
        }
        subs.insert(s.name.clone(), Inlined { diagram: inner, ids });
    }

    let outer_driver = |sub: &str, k: usize| -> Source {
        d.driver_of(&Target::Port(sub.to_string(), k)).expect("validated diagram").from.clone()
    };

    fn resolve(src: &Source, subs: &BTreeMap<String, Inlined>, outer: &dyn Fn(&str, usize) -> Source) -> Source {
        match src {
            Source::Port(id, k) => match subs.get(id) {
                Some(s) => {
                    let inner = &s.diagram.driver_of(&Target::Output(*k)).expect("validated diagram").from;
                    resolve_inner(id, inner, subs, outer)
                }
                None => src.clone(),
            },
            Source::Input(_) => src.clone(),
        }
    }

    fn resolve_inner(
        sub: &str,
        src: &Source,
        subs: &BTreeMap<String, Inlined>,
        outer: &dyn Fn(&str, usize) -> Source,
    ) -> Source {
        match src {
            Source::Port(b, k) => Source::Port(subs[sub].ids[b].clone(), *k),
            Source::Input(j) => resolve(&outer(sub, *j), subs, outer),
        }
    }

    let mut wires = Vec::new();
    for w in &d.wires {
        if matches!(&w.to, Target::Port(id, _) if subs.contains_key(id)) {
            continue;
        }
        wires.push(Wire { from: resolve(&w.from, &subs, &outer_driver), to: w.to.clone(), sort: w.sort });
    }
    for s in &d.subsystems {
        let inlined = &subs[&s.name];
        for w in &inlined.diagram.wires {
            if let Target::Port(b, k) = &w.to {
                wires.push(Wire {
                    from: resolve_inner(&s.name, &w.from, &subs, &outer_driver),
                    to: Target::Port(inlined.ids[b].clone(), *k),
                    sort: w.sort,
                });
            }
        }
    }
    Diagram {
        name: d.name.clone(),
        inputs: d.inputs.clone(),
        outputs: d.outputs.clone(),
        blocks,
        subsystems: Vec::new(),
        wires,
    }
}
