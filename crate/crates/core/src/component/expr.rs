use std::fmt;

use crate::symbolic::{Formula, TriBool};

use super::compose::{feedback, parallel, reduce, serial};
use super::{AtomicComponent, ComponentError};

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompExpr {
    Atomic(AtomicComponent),
    Serial(Box<CompExpr>, Box<CompExpr>),
    Parallel(Box<CompExpr>, Box<CompExpr>),
    Feedback(Box<CompExpr>),
}

impl CompExpr {
    pub fn atomic(c: AtomicComponent) -> CompExpr {
        CompExpr::Atomic(c)
    }

    pub fn serial(a: CompExpr, b: CompExpr) -> CompExpr {
        CompExpr::Serial(Box::new(a), Box::new(b))
    }

    pub fn parallel(a: CompExpr, b: CompExpr) -> CompExpr {
        CompExpr::Parallel(Box::new(a), Box::new(b))
    }

    pub fn feedback(a: CompExpr) -> CompExpr {
        CompExpr::Feedback(Box::new(a))
    }

    /// Left-nested serial chain; `None` for an empty list.
    pub fn serial_chain(items: impl IntoIterator<Item = CompExpr>) -> Option<CompExpr> {
        items.into_iter().reduce(CompExpr::serial)
    }

    /// Right-nested parallel stack; `None` for an empty list.
    pub fn parallel_stack(items: impl IntoIterator<Item = CompExpr>) -> Option<CompExpr> {
        let mut items: Vec<CompExpr> = items.into_iter().collect();
        let mut acc = items.pop()?;
        while let Some(x) = items.pop() {
            acc = CompExpr::parallel(x, acc);
        }
        Some(acc)
    }

    pub fn feedback_count(&self) -> usize {
        match self {
            CompExpr::Atomic(_) => 0,
            CompExpr::Serial(a, b) | CompExpr::Parallel(a, b) => a.feedback_count() + b.feedback_count(),
            CompExpr::Feedback(a) => 1 + a.feedback_count(),
        }
    }

    pub fn atoms(&self) -> Vec<&AtomicComponent> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a AtomicComponent>) {
        match self {
            CompExpr::Atomic(c) => out.push(c),
            CompExpr::Serial(a, b) | CompExpr::Parallel(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            CompExpr::Feedback(a) => a.collect_atoms(out),
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, parent_serial: bool) -> fmt::Result {
        let wrap = match self {
            CompExpr::Serial(..) => !parent_serial,
            CompExpr::Parallel(..) => true,
            _ => false,
        };
        if wrap {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for CompExpr {
    /// Algebra dump: named components by name, anonymous ones by their
    /// canonical rendering; `o` for serial, `**` for parallel.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompExpr::Atomic(c) if c.name().is_empty() => write!(f, "{c}"),
            CompExpr::Atomic(c) => f.write_str(c.name()),
            CompExpr::Serial(a, b) => {
                a.fmt_operand(f, true)?;
                f.write_str(" o ")?;
                match &**b {
                    CompExpr::Serial(..) => write!(f, "({b})"),
                    _ => b.fmt_operand(f, true),
                }
            }
            CompExpr::Parallel(a, b) => {
                match &**a {
                    CompExpr::Parallel(..) => write!(f, "({a})")?,
                    _ => a.fmt_operand(f, false)?,
                }
                f.write_str(" ** ")?;
                match &**b {
                    CompExpr::Parallel(..) => write!(f, "{b}"),
                    _ => b.fmt_operand(f, false),
                }
            }
            CompExpr::Feedback(a) => write!(f, "feedback({a})"),
        }
    }
}

/// Result of normalization with the bottom-detection outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub component: AtomicComponent,
    /// `Yes` when the precondition was found unsatisfiable, `Unknown` when the
    /// decision procedure could not tell.
    pub bottom: TriBool,
    /// Reduced precondition, kept when the component collapses to bottom.
    pub precondition: Formula,
    pub notes: Vec<String>,
}

fn fold(e: &CompExpr) -> Result<AtomicComponent, ComponentError> {
    match e {
        CompExpr::Atomic(c) => Ok(c.clone()),
        CompExpr::Serial(a, b) => serial(&fold(a)?, &fold(b)?),
        CompExpr::Parallel(a, b) => parallel(&fold(a)?, &fold(b)?),
        CompExpr::Feedback(a) => feedback(&fold(a)?),
    }
}

/// Reduces an expression to a single atomic component.
pub fn normalize(e: &CompExpr) -> Result<AtomicComponent, ComponentError> {
    Ok(normalize_detailed(e)?.component)
}

pub fn normalize_detailed(e: &CompExpr) -> Result<Normalized, ComponentError> {
    let c = fold(e)?;
    let mut notes = Vec::new();
    let pre = reduce(c.pre());
    let rel = reduce(c.rel());
    let c = AtomicComponent::assemble(
        c.name().to_string(),
        c.inputs().to_vec(),
        c.outputs().to_vec(),
        pre,
        rel,
        c.fundefs().map(<[_]>::to_vec),
    );
    if !c.pre().is_quantifier_free() {
        notes.push("precondition retains quantifiers".to_string());
    }
    let bottom = c.bottom_status();
    let precondition = c.pre().clone();
    let component = match bottom {
        TriBool::Yes => AtomicComponent::bottom(c.name().to_string(), c.inputs().to_vec(), c.outputs().to_vec()),
        TriBool::Unknown => {
            notes.push("satisfiability of the precondition is undecided".to_string());
            c
        }
        TriBool::No => c,
    };
    Ok(Normalized { component, bottom, precondition, notes })
}
