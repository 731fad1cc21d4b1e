use serde::Serialize;

use super::error::{LogicError, LogicResult};
use super::formula::{Assignment, Formula};
use super::sat::{sat_dpll_with_limit, DPLL_ATOM_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entailment {
    pub holds: bool,
    /// An assignment making every premise true and the conclusion false.
    pub countermodel: Option<Assignment>,
}

/// Semantic consequence: decided as unsatisfiability of the premises
/// together with the negated conclusion.
pub fn entails(premises: &[Formula], conclusion: &Formula) -> LogicResult<Entailment> {
    entails_with_limit(premises, conclusion, DPLL_ATOM_LIMIT)
}

pub fn entails_with_limit(
    premises: &[Formula],
    conclusion: &Formula,
    atom_limit: usize,
) -> LogicResult<Entailment> {
    for f in premises.iter().chain(std::iter::once(conclusion)) {
        if let Some(var) = f.first_var() {
            return Err(LogicError::GeneralFormula(var.to_string()));
        }
    }
    let query = Formula::conjunction(
        premises.iter().cloned().chain(std::iter::once(Formula::not(conclusion.clone()))),
    )
    .expect("non-empty conjunction");
    let result = sat_dpll_with_limit(&query, atom_limit)?;
    Ok(Entailment { holds: !result.is_sat(), countermodel: result.model })
}

/// True when no assignment satisfies all of `formulas`.
pub fn inconsistent(formulas: &[Formula]) -> LogicResult<bool> {
    let Some(all) = Formula::conjunction(formulas.iter().cloned()) else {
        return Ok(false);
    };
    Ok(!sat_dpll_with_limit(&all, DPLL_ATOM_LIMIT)?.is_sat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::{parse_formula, parse_formula_with_vars};
    use crate::logic::{substitute, Substitution};

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn modus_ponens() {
        let e = entails(&[p("A"), p("A -> B")], &p("B")).unwrap();
        assert!(e.holds);
        assert!(e.countermodel.is_none());
    }

    #[test]
    fn disjunction_does_not_entail_a_disjunct() {
        // Oracle: the only row with A|B true and A false is A=0, B=1.
        let e = entails(&[p("A | B")], &p("A")).unwrap();
        assert!(!e.holds);
        assert_eq!(e.countermodel, Some(Assignment::new().with("A", false).with("B", true)));
    }

    #[test]
    fn itikaf_instance_entails_the_fasting_rule() {
        let vars = ["X".to_string()].into();
        let sen2 = parse_formula_with_vars(
            "((Fs & Pgv -> X) | (Fs & inverse(Pgv) -> X)) <-> (Fs -> X)",
            &vars,
        )
        .unwrap();
        let sen2_fv = substitute(&sen2, &Substitution::new().with("X", "Fv")).unwrap();
        let sen3 = p("Fs & Pgv -> Fv");
        assert!(entails(&[sen2_fv, sen3.clone()], &p("Fs -> Fv")).unwrap().holds);
        // The pledged case alone is too weak.
        assert!(!entails(&[sen3], &p("Fs -> Fv")).unwrap().holds);
    }

    #[test]
    fn general_formulas_are_rejected() {
        let vars = ["X".to_string()].into();
        let g = parse_formula_with_vars("A -> X", &vars).unwrap();
        assert_eq!(entails(&[g], &p("A")).unwrap_err(), LogicError::GeneralFormula("X".into()));
    }

    #[test]
    fn empty_premises_decide_validity() {
        assert!(entails(&[], &p("A | inverse(A)")).unwrap().holds);
        assert!(!entails(&[], &p("A")).unwrap().holds);
        assert!(inconsistent(&[p("A"), p("~A")]).unwrap());
        assert!(!inconsistent(&[]).unwrap());
    }
}
