use std::fmt;

use thiserror::Error;

/// Failure to parse the rule language, with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// What was found at the error position (`end of input` at EOF).
    pub found: String,
    /// Tokens that would have been accepted, sorted.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{}: found {}", self.line, self.column, self.found)?;
        if !self.expected.is_empty() {
            write!(f, ", expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("atom `{0}` has no truth value in the assignment")]
    UnboundAtom(String),

    #[error("formula is general (contains variable `{0}`); substitute it first")]
    GeneralFormula(String),

    #[error("variable `{0}` is not bound by the substitution")]
    UnboundVariable(String),

    #[error("formula has {found} atoms, over the budget of {limit}")]
    AtomBudget { limit: usize, found: usize },

    #[error("{needed} rule instantiations needed, over the cap of {cap}")]
    InstantiationBudget { cap: u64, needed: u128 },

    #[error("`{0}` is declared both as an atom and as a variable")]
    NameClash(String),
}

pub type LogicResult<T> = Result<T, LogicError>;
