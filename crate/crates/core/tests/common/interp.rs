//! Reference interpreter that executes a hierarchical diagram directly,
//! pulling values along wires on demand. It shares no code with the
//! translator or the symbolic core.

use std::collections::BTreeMap;

use rcrskit::blocks::BlockSpec;
use rcrskit::diagram::{BlockInstance, Diagram, Source, Subsystem, Target};
use rcrskit::symbolic::rational_to_f64;

fn param(spec: &BlockSpec, key: &str) -> f64 {
    rational_to_f64(&spec.number(key).unwrap())
}

/// Number of data inputs per block type.
pub fn arity(spec: &BlockSpec) -> usize {
    match spec.type_name.as_str() {
        "Constant" => 0,
        "Add" | "Sub" | "Product" => 2,
        _ => 1,
    }
}

pub fn is_stateful(spec: &BlockSpec) -> bool {
    matches!(spec.type_name.as_str(), "UnitDelay" | "Integrator")
}

/// Outputs of a stateless block, or `None` outside its domain.
pub fn block_outputs(spec: &BlockSpec, x: &[f64]) -> Option<Vec<f64>> {
    Some(match spec.type_name.as_str() {
        "Id" | "Skip" => vec![x[0]],
        "Constant" => vec![param(spec, "c")],
        "Add" => vec![x[0] + x[1]],
        "Sub" => vec![x[0] - x[1]],
        "Product" => vec![x[0] * x[1]],
        "Gain" => vec![x[0] * param(spec, "k")],
        "Split" => {
            let n = spec.params.get("n").map(|_| param(spec, "n") as usize).unwrap_or(2);
            vec![x[0]; n]
        }
        "SqrRoot" => {
            if x[0] < 0.0 {
                return None;
            }
            vec![x[0].sqrt()]
        }
        "Saturation" => vec![x[0].max(param(spec, "lo")).min(param(spec, "hi"))],
        other => panic!("no reference semantics for {other}"),
    })
}

/// Next state of a stateful block from its input and current state.
pub fn block_next(spec: &BlockSpec, x: f64, s: f64) -> f64 {
    match spec.type_name.as_str() {
        "UnitDelay" => x,
        "Integrator" => s + x * param(spec, "dt"),
        other => panic!("{other} has no state"),
    }
}

pub fn is_deterministic(d: &Diagram) -> bool {
    d.blocks.iter().all(|b| !matches!(b.spec.type_name.as_str(), "NonDetSqrt" | "ReceptiveSqrt" | "BlackBox"))
        && d.subsystems.iter().all(|s| is_deterministic(&s.diagram))
}

type Key = (Vec<String>, String);

#[derive(Debug, PartialEq)]
pub enum Halt {
    /// A block was applied outside its domain at this step.
    Domain(usize),
}

pub struct Run {
    /// Output values per step, in declared output order.
    pub outputs: Vec<Vec<f64>>,
    pub halted: Option<Halt>,
}

struct Interp<'a> {
    top: &'a Diagram,
    state: BTreeMap<Key, f64>,
    memo: BTreeMap<Key, Vec<f64>>,
    ext: Vec<f64>,
    failed: bool,
}

fn names(path: &[&Subsystem]) -> Vec<String> {
    path.iter().map(|s| s.name.clone()).collect()
}

impl<'a> Interp<'a> {
    fn diagram(&self, path: &[&'a Subsystem]) -> &'a Diagram {
        path.last().map(|s| &s.diagram).unwrap_or(self.top)
    }

    fn driver(d: &Diagram, target: &Target) -> Source {
        d.wires.iter().find(|w| &w.to == target).unwrap_or_else(|| panic!("undriven {target}")).from.clone()
    }

    fn source(&mut self, path: &[&'a Subsystem], src: &Source) -> f64 {
        match src {
            Source::Input(j) => match path.split_last() {
                None => self.ext[*j],
                Some((sub, parent)) => {
                    let from = Self::driver(self.diagram(parent), &Target::Port(sub.name.clone(), *j));
                    self.source(parent, &from)
                }
            },
            Source::Port(id, k) => {
                let d = self.diagram(path);
                if let Some(b) = d.blocks.iter().find(|b| &b.id == id) {
                    return self.block(path, b)[*k];
                }
                let sub = d.subsystems.iter().find(|s| &s.name == id).unwrap_or_else(|| panic!("no unit {id}"));
                let mut inner = path.to_vec();
                inner.push(sub);
                let from = Self::driver(&sub.diagram, &Target::Output(*k));
                self.source(&inner, &from)
            }
        }
    }

    fn block(&mut self, path: &[&'a Subsystem], b: &'a BlockInstance) -> Vec<f64> {
        let key = (names(path), b.id.clone());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let out = if is_stateful(&b.spec) {
            vec![self.state[&key]]
        } else {
            let d = self.diagram(path);
            let xs: Vec<f64> = (0..arity(&b.spec))
                .map(|i| {
                    let from = Self::driver(d, &Target::Port(b.id.clone(), i));
                    self.source(path, &from)
                })
                .collect();
            match block_outputs(&b.spec, &xs) {
                Some(v) => v,
                None => {
                    self.failed = true;
                    vec![f64::NAN; 8]
                }
            }
        };
        self.memo.insert(key, out.clone());
        out
    }

    fn init(&mut self, path: &mut Vec<&'a Subsystem>) {
        let d = self.diagram(path);
        for b in &d.blocks {
            if is_stateful(&b.spec) {
                let s0 = b.init.first().map(rational_to_f64).unwrap_or(0.0);
                self.state.insert((names(path), b.id.clone()), s0);
            }
        }
        for s in &d.subsystems {
            path.push(s);
            self.init(path);
            path.pop();
        }
    }

    /// Next states of all stateful blocks below `path`, computed from the
    /// current step's values. Every block is evaluated so that domain
    /// violations in unused outputs are seen too.
    fn advance(&mut self, path: &mut Vec<&'a Subsystem>, next: &mut BTreeMap<Key, f64>) {
        let d = self.diagram(path);
        for b in &d.blocks {
            self.block(path, b);
            if is_stateful(&b.spec) {
                let from = Self::driver(d, &Target::Port(b.id.clone(), 0));
                let x = self.source(path, &from);
                let key = (names(path), b.id.clone());
                next.insert(key.clone(), block_next(&b.spec, x, self.state[&key]));
            }
        }
        for s in &d.subsystems {
            path.push(s);
            self.advance(path, next);
            path.pop();
        }
    }
}

/// Executes `steps` steps; `inputs[k]` holds the external input values of
/// step `k` in declared order.
pub fn run(d: &Diagram, inputs: &[Vec<f64>], steps: usize) -> Run {
    let mut it = Interp { top: d, state: BTreeMap::new(), memo: BTreeMap::new(), ext: Vec::new(), failed: false };
    it.init(&mut Vec::new());
    let mut outputs = Vec::new();
    for k in 0..steps {
        it.ext = inputs.get(k).cloned().unwrap_or_default();
        it.memo.clear();
        let row: Vec<f64> = (0..d.outputs.len())
            .map(|j| {
                let from = Interp::driver(d, &Target::Output(j));
                it.source(&[], &from)
            })
            .collect();
        let mut next = BTreeMap::new();
        it.advance(&mut Vec::new(), &mut next);
        if it.failed {
            return Run { outputs, halted: Some(Halt::Domain(k)) };
        }
        outputs.push(row);
        it.state = next;
    }
    Run { outputs, halted: None }
}
