//! Command-line front end.
//!
//! Exit codes: 0 success, 2 unusable input, 3 incompatible or refinement
//! fails, 4 undecided, 5 precondition violated during simulation, 6 the
//! normal form is not functional.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analyzer::{
    check_equivalence, check_refinement, check_translation, report, report_json, report_text, CheckOptions, Format,
    ReportOptions, Verdict, VerdictKind,
};
use crate::blocks::ParamValue;
use crate::diagram::{flatten, load, Diagram, LoadOptions};
use crate::search::DEFAULT_SAMPLES;
use crate::simulator::{simulate, SimError, SimStatus, Trace, DEFAULT_TOLERANCE};
use crate::symbolic::{parse_rational, rational_to_f64, Rational, Sort};
use crate::translator::{state_input, translate, Strategy, Translation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FAILS: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;
pub const EXIT_PRE_VIOLATED: i32 = 5;
pub const EXIT_NOT_FUNCTIONAL: i32 = 6;

#[derive(Parser, Debug)]
#[command(
    name = "rcrskit",
    version,
    about = "Translate, analyze and simulate block diagrams as refinement-calculus components"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the composition expression of a diagram.
    Translate {
        diagram: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Normalize a diagram and decide compatibility.
    Check {
        diagram: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check that the abstract diagram is refined by the concrete one.
    Refine {
        r#abstract: PathBuf,
        concrete: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the normal form of a diagram over an input trace.
    Simulate {
        diagram: PathBuf,
        #[command(flatten)]
        common: Common,
        /// CSV with one column per external input.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Step size given to every integrator, overriding its `dt`.
        #[arg(long)]
        dt: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Ic,
    Fp,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    Real,
    Bool,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_enum, default_value = "ic")]
    pub strategy: StrategyArg,
    /// Dissolve subsystems before translating.
    #[arg(long)]
    pub flatten: bool,
    /// Sort of wires that do not declare one.
    #[arg(long, value_enum, default_value = "real")]
    pub wire_sort: SortArg,
    #[arg(long, env = "RCRSKIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Sample points tried when searching for counterexamples.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Include wall-clock times in reports.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn strategies(&self) -> Vec<Strategy> {
        match self.strategy {
            StrategyArg::Ic => vec![Strategy::Ic],
            StrategyArg::Fp => vec![Strategy::Fp],
            StrategyArg::All => Strategy::ALL.to_vec(),
        }
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        }
    }

    fn check_options(&self) -> CheckOptions {
        CheckOptions { samples: self.samples, seed: self.seed }
    }

    fn report_options(&self) -> ReportOptions {
        ReportOptions { timing: self.timing }
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            default_sort: match self.wire_sort {
                SortArg::Real => Sort::Real,
                SortArg::Bool => Sort::Bool,
            },
        }
    }
}

/// Failure carrying an exit code and a message for stderr.
struct Exit(i32, String);

/// Output text, exit code and an optional diagnostic for stderr.
type Outcome = Result<(String, i32, Option<String>), Exit>;

fn input_error(e: impl std::fmt::Display) -> Exit {
    Exit(EXIT_INPUT, format!("error: {e}"))
}

fn load_diagram(path: &Path, common: &Common) -> Result<Diagram, Exit> {
    let d = load(path, &common.load_options()).map_err(input_error)?;
    Ok(if common.flatten { flatten(&d) } else { d })
}

fn translations(d: &Diagram, common: &Common) -> Result<Vec<Translation>, Exit> {
    common.strategies().into_iter().map(|s| translate(d, s).map_err(input_error)).collect()
}

fn cmd_translate(path: &Path, common: &Common) -> Outcome {
    let d = load_diagram(path, common)?;
    let ts = translations(&d, common)?;
    let text = match common.format() {
        Format::Text => ts.iter().map(|t| format!("{}: {}\n", t.strategy, t.expr)).collect(),
        Format::Json => {
            let doc: serde_json::Map<String, serde_json::Value> =
                ts.iter().map(|t| (t.strategy.to_string(), serde_json::Value::String(t.expr.to_string()))).collect();
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializes"))
        }
    };
    Ok((text, EXIT_OK, None))
}

fn exit_for(kind: VerdictKind) -> i32 {
    match kind {
        VerdictKind::Compatible | VerdictKind::RefinementHolds | VerdictKind::Equivalent => EXIT_OK,
        VerdictKind::Incompatible | VerdictKind::RefinementFails | VerdictKind::NotEquivalent => EXIT_FAILS,
        VerdictKind::Unknown => EXIT_UNKNOWN,
    }
}

fn combine(codes: impl IntoIterator<Item = i32>) -> i32 {
    let codes: Vec<i32> = codes.into_iter().collect();
    if codes.contains(&EXIT_FAILS) {
        EXIT_FAILS
    } else if codes.contains(&EXIT_UNKNOWN) {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    }
}

fn render_sections(sections: &[(String, Verdict)], common: &Common) -> String {
    let opts = common.report_options();
    if sections.len() == 1 {
        return report(&sections[0].1, common.format(), &opts);
    }
    match common.format() {
        Format::Text => sections.iter().map(|(name, v)| format!("== {name} ==\n{}", report_text(v, &opts))).collect(),
        Format::Json => {
            let doc: serde_json::Map<String, serde_json::Value> =
                sections.iter().map(|(name, v)| (name.clone(), report_json(v, &opts))).collect();
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializes"))
        }
    }
}

fn cmd_check(path: &Path, common: &Common) -> Outcome {
    let d = load_diagram(path, common)?;
    let blocks = d.block_count();
    let mut sections = Vec::new();
    for t in translations(&d, common)? {
        let v = check_translation(&t, blocks).map_err(input_error)?;
        sections.push((t.strategy.to_string(), v));
    }
    if sections.len() == 2 {
        let v = check_equivalence(&sections[0].1.normal_form, &sections[1].1.normal_form, &common.check_options())
            .map_err(input_error)?;
        sections.push(("equivalence".to_string(), v));
    }
    let code = combine(sections.iter().map(|(_, v)| exit_for(v.kind)));
    Ok((render_sections(&sections, common), code, None))
}

fn normal_form(path: &Path, common: &Common) -> Result<crate::component::AtomicComponent, Exit> {
    let d = load_diagram(path, common)?;
    let strategy = common.strategies()[0];
    let t = translate(&d, strategy).map_err(input_error)?;
    Ok(t.normalize().map_err(input_error)?.component)
}

fn cmd_refine(abs: &Path, conc: &Path, common: &Common) -> Outcome {
    let a = normal_form(abs, common)?;
    let c = normal_form(conc, common)?;
    let v = check_refinement(&a, &c, &common.check_options()).map_err(input_error)?;
    let code = exit_for(v.kind);
    Ok((report(&v, common.format(), &common.report_options()), code, None))
}

fn override_dt(d: &mut Diagram, dt: &Rational) {
    for b in &mut d.blocks {
        if b.spec.type_name == "Integrator" {
            b.spec.params.insert("dt".to_string(), ParamValue::Number(dt.clone()));
        }
    }
    for s in &mut d.subsystems {
        override_dt(&mut s.diagram, dt);
    }
}

fn cmd_simulate(path: &Path, common: &Common, trace: Option<&Path>, steps: Option<usize>, dt: Option<&str>) -> Outcome {
    let mut d = load_diagram(path, common)?;
    if let Some(text) = dt {
        let dt = parse_rational(text).ok_or_else(|| input_error(format!("invalid --dt {text:?}")))?;
        override_dt(&mut d, &dt);
    }
    let t = translate(&d, common.strategies()[0]).map_err(input_error)?;
    let c = t.normalize().map_err(input_error)?.component;
    let trace = match trace {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| input_error(format!("cannot read {}: {e}", p.display())))?;
            Trace::read_csv(file).map_err(input_error)?
        }
        None => Trace::default(),
    };
    let init: BTreeMap<String, f64> =
        d.initial_state().iter().enumerate().map(|(j, r)| (state_input(j + 1), rational_to_f64(r))).collect();
    let result = match simulate(&c, &trace, &init, steps, DEFAULT_TOLERANCE) {
        Ok(r) => r,
        Err(SimError::NotFunctional) => {
            return Err(Exit(EXIT_NOT_FUNCTIONAL, format!("error: normal form is not functional: {c}")))
        }
        Err(e @ SimError::NoCase(_)) => return Err(Exit(EXIT_NOT_FUNCTIONAL, format!("error: {e}"))),
        Err(e) => return Err(input_error(e)),
    };
    let mut csv = Vec::new();
    result.write_csv(&mut csv).map_err(input_error)?;
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    match &result.status {
        SimStatus::Completed => Ok((csv, EXIT_OK, None)),
        SimStatus::PreViolated { step, env } => {
            let vals: Vec<String> = env.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let msg = format!("precondition {} violated at step {step}: {}", c.pre(), vals.join(", "));
            Ok((csv, EXIT_PRE_VIOLATED, Some(msg)))
        }
    }
}

fn emit(text: &str, target: Option<&Path>, out: &mut dyn Write) -> Result<(), Exit> {
    match target {
        Some(p) => std::fs::write(p, text).map_err(|e| input_error(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(input_error),
    }
}

/// Runs a parsed command, writing results to `out` (or the `--out` file)
/// and diagnostics to `err`. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (outcome, common) = match &cli.command {
        Command::Translate { diagram, common } => (cmd_translate(diagram, common), common),
        Command::Check { diagram, common } => (cmd_check(diagram, common), common),
        Command::Refine { r#abstract, concrete, common } => (cmd_refine(r#abstract, concrete, common), common),
        Command::Simulate { diagram, common, trace, steps, dt } => {
            (cmd_simulate(diagram, common, trace.as_deref(), *steps, dt.as_deref()), common)
        }
    };
    match outcome {
        Ok((text, code, diag)) => match emit(&text, common.out.as_deref(), out) {
            Ok(()) => {
                if let Some(msg) = diag {
                    let _ = writeln!(err, "{msg}");
                }
                code
            }
            Err(Exit(code, msg)) => {
                let _ = writeln!(err, "{msg}");
                code
            }
        },
        Err(Exit(code, msg)) => {
            let _ = writeln!(err, "{msg}");
            code
        }
    }
}

/// Parses arguments and runs; usage errors exit with code 2.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, out, err),
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{}", e.render());
            EXIT_INPUT
        }
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            EXIT_OK
        }
    }
}
