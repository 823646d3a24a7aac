//! Terms and formulas over real arithmetic with exact rationals: substitution,
//! simplification, linear quantifier elimination and a decision procedure.

pub mod decide;
pub mod eval;
pub mod fm;
pub mod formula;
pub mod linear;
pub mod qe;
pub mod simplify;
pub mod term;

pub use decide::{check_sat, decide_linear, Mode, SatResult};
pub use eval::{eval_formula, eval_term, Env, Evaluation, Num, Value};
pub use formula::{fresh_var, Cmp, Formula};
pub use qe::{eliminate_quantifiers, eliminate_quantifiers_with_limit, DEFAULT_ATOM_LIMIT};
pub use simplify::simplify;
pub use term::{format_rational, parse_rational, rational_to_f64, Rational, Sort, Term};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("sort mismatch for {var}: expected {expected}, found {found}")]
    SortMismatch { var: String, expected: Sort, found: Sort },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("quantified formula given where a quantifier-free one is required")]
    QuantifiedInput,
    #[error("intermediate formula exceeded {limit} atoms")]
    ResourceLimit { limit: usize },
}

/// Three-valued answer of the decision procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TriBool {
    Yes,
    No,
    Unknown,
}

impl TriBool {
    pub fn from_bool(b: bool) -> TriBool {
        if b {
            TriBool::Yes
        } else {
            TriBool::No
        }
    }
}
