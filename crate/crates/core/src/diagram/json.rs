use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::blocks::{BlockSpec, ParamValue};
use crate::component::Port;
use crate::symbolic::{format_rational, parse_rational, Rational, Sort};

use super::validate::{normalize_wiring, validate};
use super::{BlockInstance, Diagram, DiagramError, Source, Subsystem, Target, Wire};

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDiagram {
    name: String,
    #[serde(default)]
    inputs: Vec<RawPort>,
    #[serde(default)]
    outputs: Vec<RawPort>,
    #[serde(default)]
    blocks: Vec<RawBlock>,
    #[serde(default)]
    subsystems: Vec<RawSubsystem>,
    #[serde(default)]
    wires: Vec<RawWire>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPort {
    name: String,
    #[serde(default = "real")]
    sort: String,
}

fn real() -> String {
    "Real".to_string()
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    id: String,
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default)]
    params: BTreeMap<String, Json>,
    #[serde(default)]
    init: Vec<Json>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSubsystem {
    name: String,
    diagram: RawDiagram,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawWire {
    from: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sort: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadOptions {
    /// Sort of wires without an explicit `sort` field.
    pub default_sort: Sort,
}

impl Default for LoadOptions {
    fn default() -> LoadOptions {
        LoadOptions { default_sort: Sort::Real }
    }
}

fn schema(pointer: String, message: impl Into<String>) -> DiagramError {
    DiagramError::Schema { pointer, message: message.into() }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        "/".to_string()
    } else {
        out
    }
}

fn rational(v: &Json, at: &str) -> Result<Rational, DiagramError> {
    let text = match v {
        Json::String(s) => s.clone(),
        Json::Number(n) => n.to_string(),
        _ => return Err(schema(at.to_string(), "expected a rational")),
    };
    parse_rational(&text).ok_or_else(|| schema(at.to_string(), format!("invalid rational {text:?}")))
}

fn sort(s: &str, at: &str) -> Result<Sort, DiagramError> {
    match Sort::parse(s) {
        Some(Sort::Unit) | None => Err(schema(at.to_string(), format!("unknown sort {s:?}"))),
        Some(s) => Ok(s),
    }
}

fn endpoint(text: &str, at: &str) -> Result<(String, usize), DiagramError> {
    let (id, k) =
        text.rsplit_once('.').ok_or_else(|| schema(at.to_string(), format!("expected <id>.<port>, found {text:?}")))?;
    let k: usize = k.parse().map_err(|_| schema(at.to_string(), format!("invalid port index in {text:?}")))?;
    Ok((id.to_string(), k))
}

fn convert(raw: RawDiagram, at: &str, opts: &LoadOptions) -> Result<Diagram, DiagramError> {
    let ports = |ps: Vec<RawPort>, key: &str| -> Result<Vec<Port>, DiagramError> {
        ps.into_iter()
            .enumerate()
            .map(|(i, p)| Ok(Port::new(p.name, sort(&p.sort, &format!("{at}/{key}/{i}/sort"))?)))
            .collect()
    };
    let inputs = ports(raw.inputs, "inputs")?;
    let outputs = ports(raw.outputs, "outputs")?;
    let mut blocks = Vec::new();
    for (i, b) in raw.blocks.into_iter().enumerate() {
        let mut spec = BlockSpec::new(b.type_name);
        for (key, v) in b.params {
            let here = format!("{at}/blocks/{i}/params/{key}");
            let value = match &v {
                Json::Number(_) => ParamValue::Number(rational(&v, &here)?),
                Json::String(s) => match parse_rational(s) {
                    Some(r) => ParamValue::Number(r),
                    None => ParamValue::Text(s.clone()),
                },
                _ => return Err(schema(here, "expected a number or a string")),
            };
            spec.params.insert(key, value);
        }
        let init = b
            .init
            .iter()
            .enumerate()
            .map(|(j, v)| rational(v, &format!("{at}/blocks/{i}/init/{j}")))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(BlockInstance { id: b.id, spec, init });
    }
    let mut subsystems = Vec::new();
    for (i, s) in raw.subsystems.into_iter().enumerate() {
        let diagram = convert(s.diagram, &format!("{at}/subsystems/{i}/diagram"), opts)?;
        subsystems.push(Subsystem { name: s.name, diagram });
    }
    let mut wires = Vec::new();
    for (i, w) in raw.wires.into_iter().enumerate() {
        let here = format!("{at}/wires/{i}");
        let (fid, fk) = endpoint(&w.from, &format!("{here}/from"))?;
        let (tid, tk) = endpoint(&w.to, &format!("{here}/to"))?;
        let from = if fid == "in" { Source::Input(fk) } else { Source::Port(fid, fk) };
        let to = if tid == "out" { Target::Output(tk) } else { Target::Port(tid, tk) };
        let sort = match &w.sort {
            Some(s) => sort(s, &format!("{here}/sort"))?,
            None => opts.default_sort,
        };
        wires.push(Wire { from, to, sort });
    }
    Ok(Diagram { name: raw.name, inputs, outputs, blocks, subsystems, wires })
}

/// Parses, validates and normalizes the wiring of a diagram document.
pub fn load_str_with(text: &str, opts: &LoadOptions) -> Result<Diagram, DiagramError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawDiagram = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        schema(pointer, e.into_inner().to_string())
    })?;
    let mut d = convert(raw, "", opts)?;
    validate(&d)?;
    normalize_wiring(&mut d);
    Ok(d)
}

pub fn load_str(text: &str) -> Result<Diagram, DiagramError> {
    load_str_with(text, &LoadOptions::default())
}

pub fn load(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Diagram, DiagramError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| DiagramError::Io { path: path.display().to_string(), message: e.to_string() })?;
    load_str_with(&text, opts)
}

fn to_raw(d: &Diagram) -> RawDiagram {
    let ports = |ps: &[Port]| ps.iter().map(|p| RawPort { name: p.name.clone(), sort: p.sort.to_string() }).collect();
    RawDiagram {
        name: d.name.clone(),
        inputs: ports(&d.inputs),
        outputs: ports(&d.outputs),
        blocks: d
            .blocks
            .iter()
            .map(|b| RawBlock {
                id: b.id.clone(),
                type_name: b.spec.type_name.clone(),
                params: b.spec.params.iter().map(|(k, v)| (k.clone(), Json::String(v.to_string()))).collect(),
                init: b.init.iter().map(|r| Json::String(format_rational(r))).collect(),
            })
            .collect(),
        subsystems: d
            .subsystems
            .iter()
            .map(|s| RawSubsystem { name: s.name.clone(), diagram: to_raw(&s.diagram) })
            .collect(),
        wires: d
            .wires
            .iter()
            .map(|w| RawWire { from: w.from.to_string(), to: w.to.to_string(), sort: Some(w.sort.to_string()) })
            .collect(),
    }
}

pub fn render_value(d: &Diagram) -> Json {
    serde_json::to_value(to_raw(d)).expect("diagram serializes")
}

/// Pretty-printed JSON document; `load_str` of the result yields `d` again.
pub fn render(d: &Diagram) -> String {
    serde_json::to_string_pretty(&to_raw(d)).expect("diagram serializes")
}
