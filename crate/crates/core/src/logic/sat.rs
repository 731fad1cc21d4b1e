//! Satisfiability of detailed formulas.
//!
//! [`sat_dpll`] converts the formula to clauses with one definitional
//! variable per connective, then runs a DPLL search (unit propagation,
//! pure-literal elimination, chronological backtracking). [`sat_bruteforce`]
//! enumerates every assignment and exists to cross-check it.

use serde::Serialize;

use super::error::{LogicError, LogicResult};
use super::eval::{evaluate, nth_assignment};
use super::formula::{Assignment, Formula};

pub const DPLL_ATOM_LIMIT: usize = 64;
pub const BRUTEFORCE_ATOM_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SatStatus {
    Satisfiable,
    Unsatisfiable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SatResult {
    pub status: SatStatus,
    /// Present exactly when satisfiable; binds every atom of the formula.
    pub model: Option<Assignment>,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Satisfiable
    }

    fn sat(model: Assignment) -> Self {
        Self { status: SatStatus::Satisfiable, model: Some(model) }
    }

    fn unsat() -> Self {
        Self { status: SatStatus::Unsatisfiable, model: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit(u32);

impl Lit {
    fn new(var: usize, positive: bool) -> Self {
        Lit(((var as u32) << 1) | u32::from(!positive))
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn negate(self) -> Self {
        Lit(self.0 ^ 1)
    }
}

struct Encoder<'a> {
    atoms: &'a [String],
    next_var: usize,
    clauses: Vec<Vec<Lit>>,
}

impl Encoder<'_> {
    fn fresh(&mut self) -> usize {
        let v = self.next_var;
        self.next_var += 1;
        v
    }

    fn encode(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::Atom(name) => {
                let idx = self.atoms.binary_search(name).expect("atom collected up front");
                Lit::new(idx, true)
            }
            Formula::Var(_) => unreachable!("general formulas are rejected before encoding"),
            Formula::Not(inner) => self.encode(inner).negate(),
            Formula::And(l, r) => {
                let (a, b) = (self.encode(l), self.encode(r));
                let x = Lit::new(self.fresh(), true);
                self.clauses.push(vec![x.negate(), a]);
                self.clauses.push(vec![x.negate(), b]);
                self.clauses.push(vec![x, a.negate(), b.negate()]);
                x
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.encode(l), self.encode(r));
                let x = Lit::new(self.fresh(), true);
                self.clauses.push(vec![x.negate(), a, b]);
                self.clauses.push(vec![x, a.negate()]);
                self.clauses.push(vec![x, b.negate()]);
                x
            }
            Formula::Implies(l, r) => {
                let (a, b) = (self.encode(l), self.encode(r));
                let x = Lit::new(self.fresh(), true);
                self.clauses.push(vec![x.negate(), a.negate(), b]);
                self.clauses.push(vec![x, a]);
                self.clauses.push(vec![x, b.negate()]);
                x
            }
            Formula::Iff(l, r) => {
                let (a, b) = (self.encode(l), self.encode(r));
                let x = Lit::new(self.fresh(), true);
                self.clauses.push(vec![x.negate(), a.negate(), b]);
                self.clauses.push(vec![x.negate(), a, b.negate()]);
                self.clauses.push(vec![x, a, b]);
                self.clauses.push(vec![x, a.negate(), b.negate()]);
                x
            }
        }
    }
}

struct Dpll {
    clauses: Vec<Vec<Lit>>,
    values: Vec<Option<bool>>,
    trail: Vec<usize>,
}

enum ClauseState {
    Satisfied,
    Conflict,
    Unit(Lit),
    Open,
}

impl Dpll {
    fn value(&self, lit: Lit) -> Option<bool> {
        self.values[lit.var()].map(|v| v == lit.positive())
    }

    fn assign(&mut self, lit: Lit) {
        self.values[lit.var()] = Some(lit.positive());
        self.trail.push(lit.var());
    }

    fn undo(&mut self, mark: usize) {
        for var in self.trail.drain(mark..) {
            self.values[var] = None;
        }
    }

    fn clause_state(&self, clause: &[Lit]) -> ClauseState {
        let mut unassigned = None;
        let mut open = 0;
        for &lit in clause {
            match self.value(lit) {
                Some(true) => return ClauseState::Satisfied,
                Some(false) => {}
                None => {
                    open += 1;
                    unassigned = Some(lit);
                }
            }
        }
        match (open, unassigned) {
            (0, _) => ClauseState::Conflict,
            (1, Some(lit)) => ClauseState::Unit(lit),
            _ => ClauseState::Open,
        }
    }

    /// Unit propagation and pure-literal elimination to a fixpoint.
    /// Returns `false` on conflict.
    fn simplify(&mut self) -> bool {
        loop {
            let mut changed = false;
            for i in 0..self.clauses.len() {
                match self.clause_state(&self.clauses[i]) {
                    ClauseState::Conflict => return false,
                    ClauseState::Unit(lit) => {
                        self.assign(lit);
                        changed = true;
                    }
                    ClauseState::Satisfied | ClauseState::Open => {}
                }
            }
            if changed {
                continue;
            }
            // polarity bits: 1 = seen positive, 2 = seen negative
            let mut polarity = vec![0u8; self.values.len()];
            for clause in &self.clauses {
                if matches!(self.clause_state(clause), ClauseState::Satisfied) {
                    continue;
                }
                for &lit in clause {
                    if self.values[lit.var()].is_none() {
                        polarity[lit.var()] |= if lit.positive() { 1 } else { 2 };
                    }
                }
            }
            for (var, bits) in polarity.into_iter().enumerate() {
                if bits == 1 || bits == 2 {
                    self.assign(Lit::new(var, bits == 1));
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn branch_literal(&self) -> Option<Lit> {
        self.clauses
            .iter()
            .filter(|c| !matches!(self.clause_state(c), ClauseState::Satisfied))
            .flat_map(|c| c.iter())
            .find(|lit| self.values[lit.var()].is_none())
            .copied()
    }

    fn solve(&mut self) -> bool {
        let mark = self.trail.len();
        if !self.simplify() {
            self.undo(mark);
            return false;
        }
        let Some(lit) = self.branch_literal() else {
            return true;
        };
        for choice in [lit, lit.negate()] {
            let branch_mark = self.trail.len();
            self.assign(choice);
            if self.solve() {
                return true;
            }
            self.undo(branch_mark);
        }
        self.undo(mark);
        false
    }
}

fn check_budget(f: &Formula, limit: usize) -> LogicResult<Vec<String>> {
    if let Some(var) = f.first_var() {
        return Err(LogicError::GeneralFormula(var.to_string()));
    }
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    if atoms.len() > limit {
        return Err(LogicError::AtomBudget { limit, found: atoms.len() });
    }
    Ok(atoms)
}

pub fn sat_dpll(f: &Formula) -> LogicResult<SatResult> {
    sat_dpll_with_limit(f, DPLL_ATOM_LIMIT)
}

pub fn sat_dpll_with_limit(f: &Formula, limit: usize) -> LogicResult<SatResult> {
    let atoms = check_budget(f, limit)?;
    let mut enc = Encoder { atoms: &atoms, next_var: atoms.len(), clauses: Vec::new() };
    let root = enc.encode(f);
    enc.clauses.push(vec![root]);
    let mut solver =
        Dpll { values: vec![None; enc.next_var], clauses: enc.clauses, trail: Vec::new() };
    if !solver.solve() {
        return Ok(SatResult::unsat());
    }
    // Every clause is satisfied by the partial assignment, so unassigned
    // atoms may take any value.
    let model: Assignment = atoms
        .iter()
        .enumerate()
        .map(|(i, name)| (name.clone(), solver.values[i].unwrap_or(false)))
        .collect();
    debug_assert!(evaluate(f, &model).unwrap_or(false));
    Ok(SatResult::sat(model))
}

pub fn sat_bruteforce(f: &Formula) -> LogicResult<SatResult> {
    sat_bruteforce_with_limit(f, BRUTEFORCE_ATOM_LIMIT)
}

pub fn sat_bruteforce_with_limit(f: &Formula, limit: usize) -> LogicResult<SatResult> {
    let atoms = check_budget(f, limit.min(63))?;
    for i in 0..1u64 << atoms.len() {
        let a = nth_assignment(&atoms, i);
        if evaluate(f, &a)? {
            return Ok(SatResult::sat(a));
        }
    }
    Ok(SatResult::unsat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse_formula;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn contradiction_is_unsat() {
        assert_eq!(sat_dpll(&p("A & inverse(A)")).unwrap(), SatResult::unsat());
        assert_eq!(sat_bruteforce(&p("A & inverse(A)")).unwrap(), SatResult::unsat());
    }

    #[test]
    fn unique_model_is_found() {
        // Oracle: of the 4 rows over A, B only A=0, B=1 satisfies it.
        let expected = Assignment::new().with("A", false).with("B", true);
        let f = p("(A | B) & inverse(A)");
        assert_eq!(sat_dpll(&f).unwrap().model, Some(expected.clone()));
        assert_eq!(sat_bruteforce(&f).unwrap().model, Some(expected));
    }

    #[test]
    fn negated_tautology_is_unsat() {
        assert!(!sat_dpll(&p("inverse(Fs -> Fs)")).unwrap().is_sat());
        let sen4 = p("((Fs & Pgv -> Fs) | (Fs & inverse(Pgv) -> Fs)) <-> (Fs -> Fs)");
        assert!(!sat_dpll(&sen4.negated()).unwrap().is_sat());
    }

    #[test]
    fn single_atom() {
        let r = sat_bruteforce(&p("A")).unwrap();
        assert_eq!(r.model, Some(Assignment::new().with("A", true)));
        assert!(sat_dpll(&p("A")).unwrap().is_sat());
        assert_eq!(sat_dpll(&p("~A")).unwrap().model, Some(Assignment::new().with("A", false)));
    }

    #[test]
    fn budgets() {
        let names: Vec<String> = (0..21).map(|i| format!("A{i}")).collect();
        let f = p(&names.join(" & "));
        assert!(matches!(sat_bruteforce(&f), Err(LogicError::AtomBudget { limit: 20, found: 21 })));
        assert!(sat_dpll(&f).unwrap().is_sat());
        assert!(matches!(sat_dpll_with_limit(&f, 10), Err(LogicError::AtomBudget { .. })));
    }

    fn random_3cnf(rng: &mut ChaCha8Rng, atoms: usize, clauses: usize) -> Formula {
        let clause = |rng: &mut ChaCha8Rng| {
            let lits: Vec<Formula> = (0..3)
                .map(|_| {
                    let a = Formula::atom(format!("x{}", rng.gen_range(0..atoms)));
                    if rng.gen_bool(0.5) { Formula::not(a) } else { a }
                })
                .collect();
            lits.into_iter().reduce(Formula::or).unwrap()
        };
        let parts: Vec<Formula> = (0..clauses).map(|_| clause(rng)).collect();
        Formula::conjunction(parts).unwrap()
    }

    #[test]
    fn random_3cnf_agrees_with_enumeration() {
        // Clause/variable ratio near 4.3 gives a mix of sat and unsat instances.
        let mut unsat = 0;
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_3cnf(&mut rng, 8, 34);
            let fast = sat_dpll(&f).unwrap();
            let slow = sat_bruteforce(&f).unwrap();
            assert_eq!(fast.status, slow.status, "seed {seed}: {f}");
            if let Some(model) = &fast.model {
                assert!(evaluate(&f, model).unwrap(), "seed {seed}");
            } else {
                unsat += 1;
            }
        }
        assert!(unsat > 50 && unsat < 950, "degenerate instance mix: {unsat} unsat");
    }
}
