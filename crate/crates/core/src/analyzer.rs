//! Compatibility, refinement and equivalence checks with reports.

use std::fmt::Write as _;
use std::time::Instant;

use serde_json::{json, Map, Value as Json};

use crate::component::{align, derivation, normalize_detailed, refute, AtomicComponent, CompExpr, ComponentError};
use crate::search::DEFAULT_SAMPLES;
use crate::symbolic::{Env, Formula, TriBool, Value};
use crate::translator::Translation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Compatible,
    Incompatible,
    RefinementHolds,
    RefinementFails,
    Equivalent,
    NotEquivalent,
    Unknown,
}

impl VerdictKind {
    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::Compatible => "Compatible",
            VerdictKind::Incompatible => "Incompatible",
            VerdictKind::RefinementHolds => "RefinementHolds",
            VerdictKind::RefinementFails => "RefinementFails",
            VerdictKind::Equivalent => "Equivalent",
            VerdictKind::NotEquivalent => "NotEquivalent",
            VerdictKind::Unknown => "Unknown",
        }
    }

    fn headline(self) -> &'static str {
        match self {
            VerdictKind::Compatible => "COMPATIBLE",
            VerdictKind::Incompatible => "INCOMPATIBLE",
            VerdictKind::RefinementHolds => "REFINEMENT HOLDS",
            VerdictKind::RefinementFails => "REFINEMENT FAILS",
            VerdictKind::Equivalent => "EQUIVALENT",
            VerdictKind::NotEquivalent => "NOT EQUIVALENT",
            VerdictKind::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub blocks: usize,
    pub feedbacks: usize,
    pub states: usize,
    pub formula_chars: usize,
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Option<Env>,
    pub normal_form: AtomicComponent,
    /// Second operand of a refinement or equivalence check.
    pub other: Option<AtomicComponent>,
    /// Precondition as reduced, also when the component collapsed to bottom.
    pub pre: Formula,
    pub notes: Vec<String>,
    pub stats: Stats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions { samples: DEFAULT_SAMPLES, seed: 0 }
    }
}

fn compatibility_of(n: crate::component::Normalized, stats: Stats) -> Verdict {
    let kind = match n.bottom {
        TriBool::Yes => VerdictKind::Incompatible,
        TriBool::No => VerdictKind::Compatible,
        TriBool::Unknown => VerdictKind::Unknown,
    };
    let stats = Stats { formula_chars: n.component.formula_chars(), ..stats };
    Verdict { kind, witness: None, normal_form: n.component, other: None, pre: n.precondition, notes: n.notes, stats }
}

/// Normalizes and decides whether the precondition is satisfiable.
pub fn check_compatibility(e: &CompExpr) -> Result<Verdict, ComponentError> {
    let start = Instant::now();
    let n = normalize_detailed(e)?;
    let stats = Stats {
        blocks: e.atoms().len(),
        feedbacks: e.feedback_count(),
        millis: start.elapsed().as_millis() as u64,
        ..Stats::default()
    };
    Ok(compatibility_of(n, stats))
}

/// Compatibility of a translated diagram; the normal form uses the
/// diagram's external port names. `blocks` is the basic-block count.
pub fn check_translation(t: &Translation, blocks: usize) -> Result<Verdict, ComponentError> {
    let start = Instant::now();
    let n = t.normalize()?;
    let stats = Stats {
        blocks,
        feedbacks: t.expr.feedback_count(),
        states: t.states,
        millis: start.elapsed().as_millis() as u64,
        ..Stats::default()
    };
    Ok(compatibility_of(n, stats))
}

enum Outcome {
    Holds,
    Fails(Option<Env>),
    Undecided,
}

fn refinement_outcome(abs: &AtomicComponent, conc: &AtomicComponent, opts: &CheckOptions) -> Outcome {
    let not = |f: &Formula| Formula::not(f.clone());
    let (p, p2, r, r2) = (abs.pre(), conc.pre(), abs.rel(), conc.rel());
    let obligations = [
        (Formula::and(vec![p.clone(), not(p2)]), Vec::new()),
        (Formula::and(vec![p.clone(), r2.clone(), not(r)]), derivation(conc)),
    ];
    let mut undecided = false;
    for (f, d) in &obligations {
        match refute(f, d, opts.samples, opts.seed) {
            (TriBool::Yes, witness) => return Outcome::Fails(witness),
            (TriBool::Unknown, _) => undecided = true,
            (TriBool::No, _) => {}
        }
    }
    if undecided {
        Outcome::Undecided
    } else {
        Outcome::Holds
    }
}

fn comparison(
    kind: VerdictKind,
    witness: Option<Env>,
    a: &AtomicComponent,
    b: AtomicComponent,
    notes: Vec<String>,
    start: Instant,
) -> Verdict {
    Verdict {
        kind,
        witness,
        normal_form: a.clone(),
        pre: a.pre().clone(),
        stats: Stats {
            formula_chars: a.formula_chars() + b.formula_chars(),
            millis: start.elapsed().as_millis() as u64,
            ..Stats::default()
        },
        other: Some(b),
        notes,
    }
}

/// `abs <= conc`: the precondition of `abs` implies that of `conc`, and on
/// it every output allowed by `conc` is allowed by `abs`.
pub fn check_refinement(
    abs: &AtomicComponent,
    conc: &AtomicComponent,
    opts: &CheckOptions,
) -> Result<Verdict, ComponentError> {
    let start = Instant::now();
    let conc = align(abs, conc)?;
    let (kind, witness, notes) = match refinement_outcome(abs, &conc, opts) {
        Outcome::Holds => (VerdictKind::RefinementHolds, None, Vec::new()),
        Outcome::Fails(w) => (VerdictKind::RefinementFails, w, Vec::new()),
        Outcome::Undecided => (
            VerdictKind::Unknown,
            None,
            vec![format!("no counterexample among {} samples (seed {})", opts.samples, opts.seed)],
        ),
    };
    Ok(comparison(kind, witness, abs, conc, notes, start))
}

/// Refinement in both directions.
pub fn check_equivalence(
    c1: &AtomicComponent,
    c2: &AtomicComponent,
    opts: &CheckOptions,
) -> Result<Verdict, ComponentError> {
    let start = Instant::now();
    let c2 = align(c1, c2)?;
    let mut undecided = false;
    let mut failure = None;
    for (a, b) in [(c1, &c2), (&c2, c1)] {
        match refinement_outcome(a, b, opts) {
            Outcome::Fails(w) => {
                failure = Some(w);
                break;
            }
            Outcome::Undecided => undecided = true,
            Outcome::Holds => {}
        }
    }
    if let Some(w) = failure {
        return Ok(comparison(VerdictKind::NotEquivalent, w, c1, c2, Vec::new(), start));
    }
    let (kind, notes) = if undecided {
        (VerdictKind::Unknown, vec![format!("no counterexample among {} samples (seed {})", opts.samples, opts.seed)])
    } else {
        (VerdictKind::Equivalent, Vec::new())
    };
    Ok(comparison(kind, None, c1, c2, notes, start))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Report measured wall-clock time; otherwise `millis` is 0 so that
    /// reports are reproducible.
    pub timing: bool,
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Real(_) => Json::String(v.to_string()),
        Value::Bool(b) => Json::Bool(*b),
        Value::Unit => Json::Null,
    }
}

pub fn witness_json(env: &Env) -> Json {
    Json::Object(env.iter().map(|(k, v)| (k.clone(), value_json(v))).collect::<Map<_, _>>())
}

pub fn report_json(v: &Verdict, opts: &ReportOptions) -> Json {
    let mut doc = json!({
        "verdict": v.kind.name(),
        "witness": v.witness.as_ref().map(witness_json),
        "normal_form": v.normal_form.to_string(),
        "pre": v.pre.to_string(),
        "stats": {
            "blocks": v.stats.blocks,
            "feedbacks": v.stats.feedbacks,
            "states": v.stats.states,
            "formula_chars": v.stats.formula_chars,
            "millis": if opts.timing { v.stats.millis } else { 0 },
        },
        "notes": v.notes,
    });
    if let Some(o) = &v.other {
        doc["other"] = Json::String(o.to_string());
    }
    doc
}

pub fn report_text(v: &Verdict, opts: &ReportOptions) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", v.kind.headline());
    let _ = writeln!(s, "normal form: {}", v.normal_form);
    if let Some(o) = &v.other {
        let _ = writeln!(s, "compared with: {o}");
    }
    let _ = writeln!(s, "pre: {}", v.pre);
    if let Some(w) = &v.witness {
        let items: Vec<String> = w.iter().map(|(k, x)| format!("{k} = {x}")).collect();
        let _ = writeln!(s, "witness: {}", items.join(", "));
    }
    let st = &v.stats;
    let _ = write!(
        s,
        "blocks: {}, feedbacks: {}, states: {}, formula chars: {}",
        st.blocks, st.feedbacks, st.states, st.formula_chars
    );
    if opts.timing {
        let _ = write!(s, ", millis: {}", st.millis);
    }
    s.push('\n');
    for n in &v.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

pub fn report(v: &Verdict, format: Format, opts: &ReportOptions) -> String {
    match format {
        Format::Text => report_text(v, opts),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(v, opts)).expect("report serializes");
            s.push('\n');
            s
        }
    }
}
