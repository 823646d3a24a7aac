mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcrskit::diagram::{flatten, load_str, render, Diagram, DiagramError, Source, Target, ValidationError};

use common::{corpus, fixture, interp};

fn schema_pointer(text: &str) -> String {
    match load_str(text) {
        Err(DiagramError::Schema { pointer, .. }) => pointer,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

fn validation(text: &str) -> ValidationError {
    match load_str(text) {
        Err(DiagramError::Validation(e)) => e,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

const GAIN_BODY: &str = r#""inputs": [{"name": "x"}], "outputs": [{"name": "y"}]"#;

#[test]
fn schema_errors_carry_json_pointers() {
    let missing_type = format!(r#"{{"name": "d", {GAIN_BODY}, "blocks": [{{"id": "g"}}]}}"#);
    assert_eq!(schema_pointer(&missing_type), "/blocks/0");

    let bad_number =
        format!(r#"{{"name": "d", {GAIN_BODY}, "blocks": [{{"id": "g", "type": "Gain", "params": {{"k": [1]}}}}]}}"#);
    assert_eq!(schema_pointer(&bad_number), "/blocks/0/params/k");

    let bad_endpoint = format!(r#"{{"name": "d", {GAIN_BODY}, "wires": [{{"from": "in", "to": "out.0"}}]}}"#);
    assert_eq!(schema_pointer(&bad_endpoint), "/wires/0/from");

    let unknown_field = r#"{"name": "d", "colour": "red"}"#;
    assert_eq!(schema_pointer(unknown_field), "/colour");

    let bad_sort = r#"{"name": "d", "inputs": [{"name": "x", "sort": "Complex"}]}"#;
    assert_eq!(schema_pointer(bad_sort), "/inputs/0/sort");

    let nested = r#"{"name": "d", "subsystems": [{"name": "s", "diagram": {"name": "s", "blocks": [{"id": "c", "type": "Constant", "init": ["x"]}]}}]}"#;
    assert_eq!(schema_pointer(nested), "/subsystems/0/diagram/blocks/0/init/0");
}

fn gain_diagram(extra_blocks: &str, wires: &str) -> String {
    format!(
        r#"{{"name": "d", {GAIN_BODY}, "blocks": [{{"id": "g", "type": "Gain", "params": {{"k": 2}}}}{extra_blocks}], "wires": [{wires}]}}"#
    )
}

#[test]
fn structural_errors() {
    let ok = r#"{"from": "in.0", "to": "g.0"}, {"from": "g.0", "to": "out.0"}"#;
    assert!(load_str(&gain_diagram("", ok)).is_ok());

    let dup = gain_diagram(r#", {"id": "g", "type": "Id"}"#, ok);
    assert_eq!(validation(&dup), ValidationError::DuplicateId("g".into()));

    let unknown = gain_diagram(r#", {"id": "h", "type": "Lookup"}"#, ok);
    assert!(matches!(validation(&unknown), ValidationError::Block { id, .. } if id == "h"));

    let dangling = gain_diagram("", r#"{"from": "g.0", "to": "out.0"}"#);
    assert!(matches!(validation(&dangling), ValidationError::Dangling(_)));

    let twice = gain_diagram("", &format!(r#"{ok}, {{"from": "g.0", "to": "g.0"}}"#));
    assert!(matches!(validation(&twice), ValidationError::DoubleDriven(_)));

    let range = gain_diagram("", r#"{"from": "in.0", "to": "g.0"}, {"from": "g.1", "to": "out.0"}"#);
    assert!(matches!(validation(&range), ValidationError::PortOutOfRange { wire: 1, .. }));

    let nowhere = gain_diagram("", r#"{"from": "in.0", "to": "h.0"}, {"from": "g.0", "to": "out.0"}"#);
    assert!(matches!(validation(&nowhere), ValidationError::UnknownEndpoint { wire: 0, .. }));

    let reserved = r#"{"name": "d", "inputs": [{"name": "si_1"}]}"#;
    assert!(matches!(validation(reserved), ValidationError::ReservedPortName(_)));
}

#[test]
fn fan_out_becomes_split_chains() {
    let d = fixture("saturation_loop");
    let mut sources: Vec<&Source> = d.wires.iter().map(|w| &w.from).collect();
    let n = sources.len();
    sources.sort();
    sources.dedup();
    assert_eq!(sources.len(), n, "a source still drives two wires");
    assert!(d.blocks.iter().any(|b| b.spec.type_name == "Split"));

    let h = fixture("hierarchy");
    let acc = &h.subsystems[0].diagram;
    let pass = acc.driver_of(&Target::Output(1)).unwrap();
    let Source::Port(id, 0) = &pass.from else { panic!("pass-through left as {}", pass.from) };
    assert_eq!(acc.blocks.iter().find(|b| &b.id == id).unwrap().spec.type_name, "Id");
}

#[test]
fn render_then_load_is_the_identity() {
    for (name, d) in corpus() {
        let text = render(&d);
        let back = load_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(back, d, "{name}");
        assert_eq!(render(&back), text, "{name}");
    }
    let large = common::gen::large_model().checked().unwrap();
    assert_eq!(load_str(&render(&large)).unwrap(), large);
}

fn same_behaviour(a: &Diagram, b: &Diagram, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| a.inputs.iter().map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    let (ra, rb) = (interp::run(a, &rows, 50), interp::run(b, &rows, 50));
    assert_eq!(ra.halted, rb.halted);
    assert_eq!(ra.outputs, rb.outputs);
}

#[test]
fn flattening_preserves_blocks_and_behaviour() {
    let mut cases: Vec<(String, Diagram)> = corpus();
    cases.push(("large".into(), common::gen::large_model().checked().unwrap()));
    for (name, d) in cases {
        let f = flatten(&d);
        assert!(f.is_flat(), "{name}");
        assert_eq!(f.depth(), 1);
        assert_eq!(f.block_count(), d.block_count(), "{name}");
        assert_eq!(flatten(&f), f, "{name}");
        assert_eq!(f.checked().unwrap(), f, "{name}");
        let mut ids: Vec<&str> = f.blocks.iter().map(|b| b.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), f.blocks.len(), "{name}");
        assert_eq!(f.initial_state().len(), d.initial_state().len(), "{name}");
        if interp::is_deterministic(&d) {
            same_behaviour(&d, &f, 5);
        }
    }
}

#[test]
fn shape_of_the_large_model() {
    let d = common::gen::large_model().checked().unwrap();
    assert_eq!(d.block_count(), common::gen::LARGE_BLOCKS);
    assert_eq!(d.depth(), 3);
    assert_eq!(d.initial_state().len(), common::gen::LARGE_STATES);
    assert_eq!(d.outputs.len(), common::gen::LARGE_OUTPUTS);
}
