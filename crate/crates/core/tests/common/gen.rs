//! Diagram generators: small random diagrams and a large three-level model.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rcrskit::blocks::BlockSpec;
use rcrskit::component::Port;
use rcrskit::diagram::{BlockInstance, Diagram, Source, Subsystem, Target, Wire};
use rcrskit::symbolic::{parse_rational, Rational, Sort};

fn rat(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn spec(ty: &str, params: &[(&str, &str)]) -> BlockSpec {
    params.iter().fold(BlockSpec::new(ty), |b, (k, v)| b.with_number(k, rat(v)))
}

pub fn port(id: &str, k: usize) -> Source {
    Source::Port(id.to_string(), k)
}

pub fn inp(id: &str, k: usize) -> Target {
    Target::Port(id.to_string(), k)
}

/// Incremental construction of one diagram level.
pub struct Level {
    pub d: Diagram,
    next: usize,
}

impl Level {
    pub fn new(name: &str, inputs: &[&str], outputs: &[&str]) -> Level {
        let mut d = Diagram::empty(name);
        d.inputs = inputs.iter().map(|n| Port::real(*n)).collect();
        d.outputs = outputs.iter().map(|n| Port::real(*n)).collect();
        Level { d, next: 0 }
    }

    pub fn block(&mut self, ty: &str, params: &[(&str, &str)]) -> String {
        let id = format!("{}{}", ty.to_lowercase(), self.next);
        self.next += 1;
        let init =
            if matches!(ty, "UnitDelay" | "Integrator") { vec![Rational::from_integer(0.into())] } else { Vec::new() };
        self.d.blocks.push(BlockInstance { id: id.clone(), spec: spec(ty, params), init });
        id
    }

    pub fn sub(&mut self, d: Diagram) -> String {
        let name = d.name.clone();
        self.d.subsystems.push(Subsystem { name: name.clone(), diagram: d });
        name
    }

    pub fn wire(&mut self, from: Source, to: Target) {
        self.d.wires.push(Wire { from, to, sort: Sort::Real });
    }
}

const GAINS: [&str; 6] = ["2", "-1", "1/2", "3", "-3/4", "1/3"];

fn random_block(rng: &mut ChaCha8Rng, nonlinear: bool) -> (&'static str, Vec<(&'static str, &'static str)>) {
    let mut pool: Vec<&str> =
        vec!["Add", "Sub", "Gain", "Gain", "Constant", "UnitDelay", "UnitDelay", "Integrator", "Id"];
    if nonlinear {
        pool.extend(["Product", "SqrRoot", "Saturation"]);
    }
    let ty = *pool.choose(rng).unwrap();
    let params = match ty {
        "Gain" => vec![("k", *GAINS.choose(rng).unwrap())],
        "Constant" => vec![("c", *["0", "1", "-2", "5/2"].choose(rng).unwrap())],
        "Integrator" => vec![("dt", *["1/10", "1/2", "1"].choose(rng).unwrap())],
        "Saturation" => vec![("lo", "-4"), ("hi", "4")],
        _ => Vec::new(),
    };
    (ty, params)
}

fn arity(ty: &str) -> usize {
    match ty {
        "Constant" => 0,
        "Add" | "Sub" | "Product" => 2,
        _ => 1,
    }
}

/// A flat diagram with at most `max_blocks` blocks: stateless blocks read
/// only earlier signals, while delays and integrators may read any signal,
/// which closes loops through state only.
pub fn random_diagram(rng: &mut ChaCha8Rng, max_blocks: usize, nonlinear: bool) -> Diagram {
    let ninputs = rng.gen_range(1..=2);
    let names: Vec<String> = (0..ninputs).map(|i| format!("u{i}")).collect();
    let nblocks = rng.gen_range(2..=max_blocks);
    let noutputs = rng.gen_range(1..=2);
    let outs: Vec<String> = (0..noutputs).map(|i| format!("y{i}")).collect();
    let in_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let out_refs: Vec<&str> = outs.iter().map(String::as_str).collect();
    let mut lv = Level::new("random", &in_refs, &out_refs);

    let mut signals: Vec<Source> = (0..ninputs).map(Source::Input).collect();
    let mut stateful = Vec::new();
    for _ in 0..nblocks {
        let (ty, params) = random_block(rng, nonlinear);
        let id = lv.block(ty, &params);
        if matches!(ty, "UnitDelay" | "Integrator") {
            stateful.push(id.clone());
        } else {
            for k in 0..arity(ty) {
                let from = signals.choose(rng).unwrap().clone();
                lv.wire(from, inp(&id, k));
            }
        }
        signals.push(port(&id, 0));
    }
    for id in stateful {
        let from = signals.choose(rng).unwrap().clone();
        lv.wire(from, inp(&id, 0));
    }
    let block_signals = &signals[ninputs..];
    for j in 0..noutputs {
        let from = block_signals.choose(rng).unwrap().clone();
        lv.wire(from, Target::Output(j));
    }
    lv.d
}

/// Accumulator loop `y = k * (u + y)` through a unit delay; returns the
/// split branch that leaves the loop. Four blocks, one state, one loop.
fn loop_cell(lv: &mut Level, input: Source, k: &str) -> Source {
    let add = lv.block("Add", &[]);
    let g = lv.block("Gain", &[("k", k)]);
    let d = lv.block("UnitDelay", &[]);
    let sp = lv.block("Split", &[]);
    lv.wire(input, inp(&add, 0));
    lv.wire(port(&sp, 0), inp(&add, 1));
    lv.wire(port(&add, 0), inp(&g, 0));
    lv.wire(port(&g, 0), inp(&d, 0));
    lv.wire(port(&d, 0), inp(&sp, 0));
    port(&sp, 1)
}

/// Two loops, a product, a gain and an integrator: 12 blocks, 3 states.
fn leaf(name: &str) -> Diagram {
    let mut lv = Level::new(name, &["u1", "u2"], &["y1", "y2"]);
    let a = loop_cell(&mut lv, Source::Input(0), "1/2");
    let b = loop_cell(&mut lv, Source::Input(1), "-1/4");
    let sp = lv.block("Split", &[]);
    lv.wire(a, inp(&sp, 0));
    let m = lv.block("Product", &[]);
    lv.wire(port(&sp, 0), inp(&m, 0));
    lv.wire(b, inp(&m, 1));
    let g = lv.block("Gain", &[("k", "1/4")]);
    lv.wire(port(&m, 0), inp(&g, 0));
    let i = lv.block("Integrator", &[("dt", "1/100")]);
    lv.wire(port(&sp, 1), inp(&i, 0));
    lv.wire(port(&g, 0), Target::Output(0));
    lv.wire(port(&i, 0), Target::Output(1));
    lv.d
}

/// Two leaves plus 8 blocks (one delay): 32 blocks, 7 states, 4 loops.
fn mid(name: &str) -> Diagram {
    let mut lv = Level::new(name, &["u1", "u2", "u3"], &["z1", "z2"]);
    let s = lv.block("Sub", &[]);
    lv.wire(Source::Input(0), inp(&s, 0));
    lv.wire(Source::Input(1), inp(&s, 1));
    let c = lv.block("Constant", &[("c", "1/2")]);
    let ad = lv.block("Add", &[]);
    lv.wire(Source::Input(2), inp(&ad, 0));
    lv.wire(port(&c, 0), inp(&ad, 1));
    let sps = lv.block("Split", &[]);
    lv.wire(port(&s, 0), inp(&sps, 0));
    let spa = lv.block("Split", &[]);
    lv.wire(port(&ad, 0), inp(&spa, 0));
    let la = lv.sub(leaf(&format!("{name}_a")));
    let lb = lv.sub(leaf(&format!("{name}_b")));
    lv.wire(port(&sps, 0), inp(&la, 0));
    lv.wire(port(&spa, 0), inp(&la, 1));
    lv.wire(port(&spa, 1), inp(&lb, 0));
    lv.wire(port(&sps, 1), inp(&lb, 1));
    let z1 = lv.block("Add", &[]);
    lv.wire(port(&la, 0), inp(&z1, 0));
    lv.wire(port(&lb, 0), inp(&z1, 1));
    let z2 = lv.block("Sub", &[]);
    lv.wire(port(&la, 1), inp(&z2, 0));
    lv.wire(port(&lb, 1), inp(&z2, 1));
    let dz = lv.block("UnitDelay", &[]);
    lv.wire(port(&z2, 0), inp(&dz, 0));
    lv.wire(port(&z1, 0), Target::Output(0));
    lv.wire(port(&dz, 0), Target::Output(1));
    lv.d
}

pub const LARGE_BLOCKS: usize = 104;
pub const LARGE_LOOPS: usize = 8;
pub const LARGE_STATES: usize = 14;
pub const LARGE_OUTPUTS: usize = 7;

/// Three-level model with 104 basic blocks, 8 feedback loops, 14 stateful
/// blocks, 6 inputs and 7 outputs; no fan-out, so the block count is exact.
pub fn large_model() -> Diagram {
    let outs = ["o1", "o2", "o3", "o4", "o5", "o6", "o7"];
    let mut lv = Level::new("plant", &["i1", "i2", "i3", "i4", "i5", "i6"], &outs);
    let m1 = lv.sub(mid("m1"));
    let m2 = lv.sub(mid("m2"));
    for k in 0..3 {
        lv.wire(Source::Input(k), inp(&m1, k));
        lv.wire(Source::Input(k + 3), inp(&m2, k));
    }
    let sp1 = lv.block("Split", &[("n", "3")]);
    let sp2 = lv.block("Split", &[]);
    let sp3 = lv.block("Split", &[]);
    let sp4 = lv.block("Split", &[]);
    lv.wire(port(&m1, 0), inp(&sp1, 0));
    lv.wire(port(&m1, 1), inp(&sp2, 0));
    lv.wire(port(&m2, 0), inp(&sp3, 0));
    lv.wire(port(&m2, 1), inp(&sp4, 0));

    let mut drivers: Vec<Source> = Vec::new();
    let unary = |lv: &mut Level, ty: &str, params: &[(&str, &str)], from: Source| {
        let id = lv.block(ty, params);
        lv.wire(from, inp(&id, 0));
        port(&id, 0)
    };
    drivers.push(unary(&mut lv, "Gain", &[("k", "2")], port(&sp1, 0)));
    drivers.push(unary(&mut lv, "Saturation", &[("lo", "-10"), ("hi", "10")], port(&sp2, 0)));
    drivers.push(unary(&mut lv, "Gain", &[("k", "-1")], port(&sp3, 0)));
    drivers.push(unary(&mut lv, "Gain", &[("k", "1/3")], port(&sp4, 0)));
    let add = lv.block("Add", &[]);
    lv.wire(port(&sp1, 1), inp(&add, 0));
    lv.wire(port(&sp3, 1), inp(&add, 1));
    drivers.push(port(&add, 0));
    let sub = lv.block("Sub", &[]);
    lv.wire(port(&sp2, 1), inp(&sub, 0));
    lv.wire(port(&sp4, 1), inp(&sub, 1));
    drivers.push(port(&sub, 0));
    drivers.push(unary(&mut lv, "Gain", &[("k", "3/2")], port(&sp1, 2)));

    let mut j = 0;
    while lv.d.block_count() < LARGE_BLOCKS {
        let k = if lv.d.block_count().is_multiple_of(2) { "2" } else { "1/2" };
        let from = drivers[j].clone();
        drivers[j] = unary(&mut lv, "Gain", &[("k", k)], from);
        j = (j + 1) % drivers.len();
    }
    for (j, from) in drivers.into_iter().enumerate() {
        lv.wire(from, Target::Output(j));
    }
    lv.d
}
