//! Parameterized basic blocks.
//!
//! Stateful blocks expose their state as a trailing input `s` (current) and a
//! trailing output `s'` (next).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::component::{AtomicComponent, ComponentError, Port};
use crate::symbolic::{format_rational, fresh_var, parse_rational, Formula, Rational, Sort, Term};

pub const BLOCK_TYPES: [&str; 15] = [
    "Id",
    "Skip",
    "Constant",
    "Add",
    "Sub",
    "Gain",
    "Product",
    "Split",
    "UnitDelay",
    "Integrator",
    "SqrRoot",
    "NonDetSqrt",
    "ReceptiveSqrt",
    "Saturation",
    "BlackBox",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamValue {
    Number(Rational),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(r) => f.write_str(&format_rational(r)),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("unknown block type {0}")]
    UnknownBlockType(String),
    #[error("block {block} needs parameter {param}")]
    MissingParameter { block: String, param: String },
    #[error("parameter {param} of {block}: {reason}")]
    InvalidParameter { block: String, param: String, reason: String },
    #[error(transparent)]
    Component(#[from] ComponentError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub type_name: String,
    pub params: BTreeMap<String, ParamValue>,
}

/// Port sorts as seen from a diagram: data inputs and outputs exclude the
/// state ports, which come last in the component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSignature {
    pub inputs: Vec<Sort>,
    pub outputs: Vec<Sort>,
    pub states: Vec<Sort>,
}

impl BlockSpec {
    pub fn new(type_name: impl Into<String>) -> BlockSpec {
        BlockSpec { type_name: type_name.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> BlockSpec {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_number(self, key: &str, value: Rational) -> BlockSpec {
        self.with(key, ParamValue::Number(value))
    }

    pub fn with_int(self, key: &str, value: i64) -> BlockSpec {
        self.with_number(key, Rational::from_integer(value.into()))
    }

    fn missing(&self, param: &str) -> BlockError {
        BlockError::MissingParameter { block: self.type_name.clone(), param: param.to_string() }
    }

    fn invalid(&self, param: &str, reason: &str) -> BlockError {
        BlockError::InvalidParameter {
            block: self.type_name.clone(),
            param: param.to_string(),
            reason: reason.to_string(),
        }
    }

    pub fn number(&self, key: &str) -> Result<Rational, BlockError> {
        match self.params.get(key) {
            None => Err(self.missing(key)),
            Some(ParamValue::Number(r)) => Ok(r.clone()),
            Some(ParamValue::Text(s)) => parse_rational(s).ok_or_else(|| self.invalid(key, "not a rational")),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, BlockError> {
        if !self.params.contains_key(key) {
            return Ok(default);
        }
        let r = self.number(key)?;
        match usize::try_from(r.to_integer()) {
            Ok(n) if r.is_integer() && n >= 2 => Ok(n),
            _ => Err(self.invalid(key, "expected an integer of at least 2")),
        }
    }

    /// Signal sort of polymorphic wiring blocks; `Real` unless given.
    fn sort(&self) -> Result<Sort, BlockError> {
        match self.params.get("sort") {
            None => Ok(Sort::Real),
            Some(ParamValue::Text(s)) => match Sort::parse(s) {
                Some(Sort::Unit) | None => Err(self.invalid("sort", "expected Real or Bool")),
                Some(s) => Ok(s),
            },
            Some(ParamValue::Number(_)) => Err(self.invalid("sort", "expected Real or Bool")),
        }
    }

    fn real_only(&self) -> Result<(), BlockError> {
        match self.sort()? {
            Sort::Real => Ok(()),
            _ => Err(self.invalid("sort", "block is numeric")),
        }
    }

    pub fn is_stateful(&self) -> bool {
        matches!(self.type_name.as_str(), "UnitDelay" | "Integrator")
    }

    pub fn signature(&self) -> Result<BlockSignature, BlockError> {
        let c = build(self, false)?;
        let n_states = if self.is_stateful() { 1 } else { 0 };
        let ins: Vec<Sort> = c.inputs().iter().map(|p| p.sort).collect();
        let outs: Vec<Sort> = c.outputs().iter().map(|p| p.sort).collect();
        Ok(BlockSignature {
            inputs: ins[..ins.len() - n_states].to_vec(),
            outputs: outs[..outs.len() - n_states].to_vec(),
            states: ins[ins.len() - n_states..].to_vec(),
        })
    }
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn reals(names: &[&str]) -> Vec<Port> {
    names.iter().map(|n| Port::real(*n)).collect()
}

fn source_input(unit_input: bool) -> Vec<Port> {
    if unit_input {
        vec![Port::new("u", Sort::Unit)]
    } else {
        Vec::new()
    }
}

/// Builds the block. Source blocks take a `Unit` input when `unit_input` is
/// set and no input at all otherwise.
fn build(spec: &BlockSpec, unit_input: bool) -> Result<AtomicComponent, BlockError> {
    let name = spec.type_name.as_str();
    let tt = Formula::True;
    let zero = Term::int(0);
    let c = match name {
        "Id" | "Skip" => {
            let s = spec.sort()?;
            AtomicComponent::functional(
                name,
                vec![Port::new("x", s)],
                vec![Port::new("y", s)],
                tt,
                vec![Term::typed_var("x", s)],
            )?
        }
        "Constant" => {
            let c = spec.number("c")?;
            AtomicComponent::functional(name, source_input(unit_input), reals(&["y"]), tt, vec![Term::constant(c)])?
        }
        "BlackBox" => AtomicComponent::new(name, source_input(unit_input), reals(&["y"]), tt.clone(), tt)?,
        "Add" => AtomicComponent::functional(name, reals(&["x", "y"]), reals(&["z"]), tt, vec![v("x") + v("y")])?,
        "Sub" => AtomicComponent::functional(name, reals(&["x", "y"]), reals(&["z"]), tt, vec![v("x") - v("y")])?,
        "Product" => AtomicComponent::functional(name, reals(&["x", "y"]), reals(&["z"]), tt, vec![v("x") * v("y")])?,
        "Gain" => {
            let k = spec.number("k")?;
            AtomicComponent::functional(name, reals(&["x"]), reals(&["y"]), tt, vec![v("x") * Term::constant(k)])?
        }
        "Split" => {
            let s = spec.sort()?;
            let n = spec.count("n", 2)?;
            let outs = (1..=n).map(|i| Port::new(format!("a{i}"), s)).collect();
            AtomicComponent::functional(name, vec![Port::new("a", s)], outs, tt, vec![Term::typed_var("a", s); n])?
        }
        "UnitDelay" => {
            let s = spec.sort()?;
            let ins = vec![Port::new("x", s), Port::new("s", s)];
            let outs = vec![Port::new("y", s), Port::new("s'", s)];
            AtomicComponent::functional(name, ins, outs, tt, vec![Term::typed_var("s", s), Term::typed_var("x", s)])?
        }
        "Integrator" => {
            spec.real_only()?;
            let dt = spec.number("dt")?;
            AtomicComponent::functional(
                name,
                reals(&["x", "s"]),
                reals(&["y", "s'"]),
                tt,
                vec![v("s"), v("s") + v("x") * Term::constant(dt)],
            )?
        }
        "SqrRoot" => AtomicComponent::functional(
            name,
            reals(&["x"]),
            reals(&["y"]),
            Formula::le(zero, v("x")),
            vec![Term::sqrt(v("x"))],
        )?,
        "NonDetSqrt" => AtomicComponent::new(
            name,
            reals(&["x"]),
            reals(&["y"]),
            Formula::le(zero.clone(), v("x")),
            Formula::le(zero, v("y")),
        )?,
        "ReceptiveSqrt" => AtomicComponent::new(
            name,
            reals(&["x"]),
            reals(&["y"]),
            tt,
            Formula::implies(Formula::le(zero, v("x")), Formula::eq(v("y"), Term::sqrt(v("x")))),
        )?,
        "Saturation" => {
            let lo = spec.number("lo")?;
            let hi = spec.number("hi")?;
            if lo > hi {
                return Err(spec.invalid("lo", "must not exceed hi"));
            }
            let (lo, hi) = (Term::constant(lo), Term::constant(hi));
            let rel = Formula::or(vec![
                Formula::and(vec![Formula::eq(v("y"), lo.clone()), Formula::le(v("x"), lo.clone())]),
                Formula::and(vec![
                    Formula::eq(v("y"), v("x")),
                    Formula::le(lo, v("x")),
                    Formula::le(v("x"), hi.clone()),
                ]),
                Formula::and(vec![Formula::eq(v("y"), hi.clone()), Formula::le(hi, v("x"))]),
            ]);
            AtomicComponent::new(name, reals(&["x"]), reals(&["y"]), Formula::True, rel)?
        }
        _ => return Err(BlockError::UnknownBlockType(name.to_string())),
    };
    Ok(c)
}

/// The block as an atomic component; source blocks take a `Unit` input.
pub fn instantiate(spec: &BlockSpec) -> Result<AtomicComponent, BlockError> {
    build(spec, true)
}

/// Like [`instantiate`], with port names made fresh with respect to `avoid`,
/// which is extended with the names used.
pub fn instantiate_fresh(spec: &BlockSpec, avoid: &mut BTreeSet<String>) -> Result<AtomicComponent, BlockError> {
    freshen(build(spec, true)?, avoid)
}

/// The block as placed in a diagram: source blocks have no inputs.
pub fn diagram_component(spec: &BlockSpec, avoid: &mut BTreeSet<String>) -> Result<AtomicComponent, BlockError> {
    freshen(build(spec, false)?, avoid)
}

fn freshen(c: AtomicComponent, avoid: &mut BTreeSet<String>) -> Result<AtomicComponent, BlockError> {
    let mut map = BTreeMap::new();
    for n in c.input_names().into_iter().chain(c.output_names()) {
        let fresh = fresh_var(&n, avoid);
        avoid.insert(fresh.clone());
        map.insert(n, fresh);
    }
    Ok(c.rename(&map)?)
}
