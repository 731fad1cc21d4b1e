//! The propositional rule language: formulas, parsing and printing,
//! evaluation, satisfiability, entailment, deduction by substitution, and
//! the circularity check.

mod derive;
mod entail;
mod error;
mod eval;
mod formula;
mod parser;
mod printer;
mod sat;
mod strat;

pub use derive::{
    derive_detailed, derive_detailed_with, instantiate_all, instantiation_count, DeductionStatus,
    DeductionStep, DeductionTrace, DeriveOptions, StepKind, DEFAULT_INSTANTIATION_CAP,
};
pub use entail::{entails, entails_with_limit, inconsistent, Entailment};
pub use error::{LogicError, LogicResult, ParseError};
pub use eval::{
    evaluate, nth_assignment, substitute, truth_table, truth_table_with_limit, TruthRow,
    TruthTable, TRUTH_TABLE_ATOM_LIMIT,
};
pub use formula::{Assignment, Formula, NamedFormula, Substitution};
pub use parser::{
    is_identifier, parse_document, parse_formula, parse_formula_with_vars, FormulaDoc, MAX_DEPTH,
    MAX_NESTING,
};
pub use printer::print_formula;
pub use sat::{
    sat_bruteforce, sat_bruteforce_with_limit, sat_dpll, sat_dpll_with_limit, SatResult,
    SatStatus, BRUTEFORCE_ATOM_LIMIT, DPLL_ATOM_LIMIT,
};
pub use strat::{check_stratification, Cycle, StratificationReport};
