//! Hierarchical block diagrams: data model, JSON loading and rendering,
//! structural validation and flattening.

mod flatten;
mod json;
mod validate;

pub use flatten::flatten;
pub use json::{load, load_str, load_str_with, render, render_value, LoadOptions};
pub use validate::ValidationError;

use std::fmt;

use thiserror::Error;

use crate::blocks::{BlockSignature, BlockSpec};
use crate::component::Port;
use crate::symbolic::{Rational, Sort};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    pub name: String,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub blocks: Vec<BlockInstance>,
    pub subsystems: Vec<Subsystem>,
    pub wires: Vec<Wire>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockInstance {
    pub id: String,
    pub spec: BlockSpec,
    /// Initial value per state port; empty means all zero.
    pub init: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subsystem {
    pub name: String,
    pub diagram: Diagram,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Input(usize),
    Port(String, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Output(usize),
    Port(String, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wire {
    pub from: Source,
    pub to: Target,
    pub sort: Sort,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Input(k) => write!(f, "in.{k}"),
            Source::Port(id, k) => write!(f, "{id}.{k}"),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Output(k) => write!(f, "out.{k}"),
            Target::Port(id, k) => write!(f, "{id}.{k}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// A block or a subsystem, seen through its ports.
#[derive(Clone, Copy, Debug)]
pub enum Unit<'a> {
    Block(&'a BlockInstance),
    Subsystem(&'a Subsystem),
}

impl<'a> Unit<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            Unit::Block(b) => &b.id,
            Unit::Subsystem(s) => &s.name,
        }
    }

    /// Data ports and state ports of the unit. Blocks must have valid specs.
    pub fn signature(&self) -> BlockSignature {
        match self {
            Unit::Block(b) => b.spec.signature().expect("validated block"),
            Unit::Subsystem(s) => BlockSignature {
                inputs: s.diagram.inputs.iter().map(|p| p.sort).collect(),
                outputs: s.diagram.outputs.iter().map(|p| p.sort).collect(),
                states: s.diagram.state_sorts(),
            },
        }
    }
}

impl Diagram {
    pub fn empty(name: impl Into<String>) -> Diagram {
        Diagram {
            name: name.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            blocks: Vec::new(),
            subsystems: Vec::new(),
            wires: Vec::new(),
        }
    }

    /// Blocks in declaration order, then subsystems.
    pub fn units(&self) -> Vec<Unit<'_>> {
        self.blocks.iter().map(Unit::Block).chain(self.subsystems.iter().map(Unit::Subsystem)).collect()
    }

    pub fn unit(&self, id: &str) -> Option<Unit<'_>> {
        self.units().into_iter().find(|u| u.id() == id)
    }

    pub fn is_flat(&self) -> bool {
        self.subsystems.is_empty()
    }

    /// Sorts of all state ports, blocks first and then subsystems, each in
    /// declaration order.
    pub fn state_sorts(&self) -> Vec<Sort> {
        let mut out = Vec::new();
        for u in self.units() {
            out.extend(u.signature().states);
        }
        out
    }

    /// Initial state values in state order; missing values are zero.
    pub fn initial_state(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for u in self.units() {
            match u {
                Unit::Block(b) => {
                    let n = b.spec.signature().map(|s| s.states.len()).unwrap_or(0);
                    for j in 0..n {
                        out.push(b.init.get(j).cloned().unwrap_or_default());
                    }
                }
                Unit::Subsystem(s) => out.extend(s.diagram.initial_state()),
            }
        }
        out
    }

    /// Number of basic blocks, recursively.
    pub fn block_count(&self) -> usize {
        self.blocks.len() + self.subsystems.iter().map(|s| s.diagram.block_count()).sum::<usize>()
    }

    /// Nesting depth; a flat diagram has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.subsystems.iter().map(|s| s.diagram.depth()).max().unwrap_or(0)
    }

    pub fn driver_of(&self, target: &Target) -> Option<&Wire> {
        self.wires.iter().find(|w| &w.to == target)
    }
}

impl Diagram {
    /// Validates the diagram and returns it with normalized wiring (no
    /// fan-out, no direct input-to-output wires).
    pub fn checked(&self) -> Result<Diagram, ValidationError> {
        validate::validate(self)?;
        let mut d = self.clone();
        validate::normalize_wiring(&mut d);
        Ok(d)
    }
}
