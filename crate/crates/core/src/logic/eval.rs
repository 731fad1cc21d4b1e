use serde::Serialize;

use super::error::{LogicError, LogicResult};
use super::formula::{Assignment, Formula, Substitution};

/// Default atom budget for [`truth_table`].
pub const TRUTH_TABLE_ATOM_LIMIT: usize = 24;

/// Truth-functional value of a detailed formula.
pub fn evaluate(f: &Formula, a: &Assignment) -> LogicResult<bool> {
    if let Some(var) = f.first_var() {
        return Err(LogicError::GeneralFormula(var.to_string()));
    }
    eval_detailed(f, a)
}

fn eval_detailed(f: &Formula, a: &Assignment) -> LogicResult<bool> {
    Ok(match f {
        Formula::Atom(name) => a.get(name).ok_or_else(|| LogicError::UnboundAtom(name.clone()))?,
        Formula::Var(name) => return Err(LogicError::GeneralFormula(name.clone())),
        Formula::Not(inner) => !eval_detailed(inner, a)?,
        Formula::And(l, r) => eval_detailed(l, a)? && eval_detailed(r, a)?,
        Formula::Or(l, r) => eval_detailed(l, a)? || eval_detailed(r, a)?,
        Formula::Implies(l, r) => !eval_detailed(l, a)? || eval_detailed(r, a)?,
        Formula::Iff(l, r) => eval_detailed(l, a)? == eval_detailed(r, a)?,
    })
}

/// Replaces each variable by the atom it is bound to. Runs in one pass
/// over the formula.
pub fn substitute(f: &Formula, s: &Substitution) -> LogicResult<Formula> {
    f.map_leaves(&mut |leaf| match leaf {
        Formula::Var(name) => s
            .get(name)
            .map(Formula::atom)
            .ok_or_else(|| LogicError::UnboundVariable(name.clone())),
        other => Ok(other.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthRow {
    pub assignment: Assignment,
    pub value: bool,
}

/// All `2^n` rows over the formula's atoms in sorted order. The first atom
/// is the most significant bit; `false` sorts before `true`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthTable {
    pub atoms: Vec<String>,
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn count_true(&self) -> usize {
        self.rows.iter().filter(|r| r.value).count()
    }
}

/// Assignment number `index` of the enumeration used by [`truth_table`].
pub fn nth_assignment(atoms: &[String], index: u64) -> Assignment {
    let n = atoms.len();
    atoms
        .iter()
        .enumerate()
        .map(|(i, name)| (name.clone(), (index >> (n - 1 - i)) & 1 == 1))
        .collect()
}

pub fn truth_table(f: &Formula) -> LogicResult<TruthTable> {
    truth_table_with_limit(f, TRUTH_TABLE_ATOM_LIMIT)
}

pub fn truth_table_with_limit(f: &Formula, limit: usize) -> LogicResult<TruthTable> {
    if let Some(var) = f.first_var() {
        return Err(LogicError::GeneralFormula(var.to_string()));
    }
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    if atoms.len() > limit.min(63) {
        return Err(LogicError::AtomBudget { limit, found: atoms.len() });
    }
    let rows = (0..1u64 << atoms.len())
        .map(|i| {
            let assignment = nth_assignment(&atoms, i);
            let value = eval_detailed(f, &assignment)?;
            Ok(TruthRow { assignment, value })
        })
        .collect::<LogicResult<Vec<_>>>()?;
    Ok(TruthTable { atoms, rows })
}
